use adapid_core::mixture::{
    log_reweight_density, predicted_jacobian, predicted_responsibilities, predicted_state,
    probe_posterior, EnergyCalibration, GaussianMixture,
};
use adapid_core::models::{model, regular3x3};
use adapid_core::schedule::{coeffs_const, GreensCoeffs, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let pieces = 400;
    let h = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|i| simpson(f, lo + i as f64 * h, lo + (i + 1) as f64 * h, 1e-16))
        .sum()
}

fn line_mixture() -> GaussianMixture {
    GaussianMixture::from_flat(1, vec![0.2, 0.5, 0.3], vec![-3.0, 0.5, 2.5], vec![0.4, 0.9, 0.25])
        .unwrap()
}

#[test]
fn predicted_state_matches_quadrature_in_one_dimension() {
    let gm = line_mixture();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let beta = rng.random_range(0.0..10.0);
        let t = rng.random_range(0.05..0.95);
        let x = rng.random_range(-4.0..4.0);
        let c = coeffs_const(beta, t).unwrap();
        let log_f = |y: f64| gm.log_density(&[y]) + log_reweight_density(&c, &[x], &[y]).unwrap();
        let (lo, hi) = (-12.0, 12.0);
        let peak = (0..=4000)
            .map(|i| log_f(lo + (hi - lo) * i as f64 / 4000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let mass = integrate(&|y| (log_f(y) - peak).exp(), lo, hi);
        let first = integrate(&|y| y * (log_f(y) - peak).exp(), lo, hi);
        let y_hat = predicted_state(&gm, &c, &[x]).unwrap()[0];
        assert!(rel(y_hat, first / mass) <= 1e-6, "β={beta} t={t} x={x}: {y_hat} vs {}", first / mass);
    }
}

#[test]
fn reweight_density_is_normalized() {
    let c = coeffs_const(1.5, 0.4).unwrap();
    let centre = c.shift() * 0.7;
    let total = integrate(
        &|y| log_reweight_density(&c, &[0.7], &[y]).unwrap().exp(),
        centre - 20.0,
        centre + 20.0,
    );
    assert!((total - 1.0).abs() < 1e-3);
    let at_mode = log_reweight_density(&c, &[0.7], &[centre]).unwrap();
    for dy in [-0.1, 0.05, 0.3] {
        assert!(log_reweight_density(&c, &[0.7], &[centre + dy]).unwrap() < at_mode);
    }
}

#[test]
fn score_matches_finite_differences() {
    let gm = model("perturbedA").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        let s = gm.score(&x);
        for i in 0..2 {
            let h = 1e-5;
            let (mut up, mut dn) = (x, x);
            up[i] += h;
            dn[i] -= h;
            let fd = (gm.log_density(&up) - gm.log_density(&dn)) / (2.0 * h);
            assert!((s[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{x:?}: {} vs {fd}", s[i]);
        }
    }
}

#[test]
fn score_vanishes_at_modes() {
    for name in ["regular3x3", "perturbedA", "perturbedB"] {
        let gm = model(name).unwrap();
        for m in gm.modes() {
            let s = gm.score(&m);
            assert!(s.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-6, "{name}: {s:?}");
        }
    }
}

#[test]
fn energy_calibrations() {
    let gm = regular3x3();
    assert_eq!(gm.energy(&[0.0, 0.0]), 0.0);
    assert!(gm.energy(&[4.0, 4.0]) < gm.energy(&[2.0, 4.0]));
    let gm = model("perturbedA").unwrap().with_calibration(EnergyCalibration::Minimum);
    let energies: Vec<f64> = gm.modes().iter().map(|m| gm.energy(m)).collect();
    let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min.abs() < 1e-12);
    assert!(energies.iter().all(|&e| e >= -1e-12));
}

#[test]
fn sampling_statistics() {
    let gm = model("perturbedB").unwrap();
    let m = 100_000;
    let (pts, labels) = gm.sample_with_labels(m, 5);
    assert_eq!(pts, gm.sample(m, 5));
    let want = gm.first_moment();
    for i in 0..2 {
        let vals: Vec<f64> = pts.iter().skip(i).step_by(2).copied().collect();
        let mean = vals.iter().sum::<f64>() / m as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
        assert!((mean - want[i]).abs() <= 3.0 * (var / m as f64).sqrt());
    }
    for k in 0..9 {
        let count = labels.iter().filter(|&&l| l == k).count() as f64;
        let p = gm.weights()[k];
        let sd = (m as f64 * p * (1.0 - p)).sqrt();
        assert!((count - m as f64 * p).abs() <= 3.0 * sd + 1.0, "component {k}");
    }
}

#[test]
fn jacobian_matches_finite_differences_and_is_symmetric() {
    let schedule = Schedule::pwc(vec![0.5, 3.0, 8.0]).unwrap();
    let gm = model("perturbedA").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = rng.random_range(0.02..0.98);
        let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let c = schedule.coeffs(t).unwrap();
        let jac = predicted_jacobian(&gm, &c, &x).unwrap();
        let scale = jac.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
        for j in 0..2 {
            let h = 1e-6 * (1.0 + x[j].abs());
            let (mut up, mut dn) = (x, x);
            up[j] += h;
            dn[j] -= h;
            let yu = predicted_state(&gm, &c, &up).unwrap();
            let yd = predicted_state(&gm, &c, &dn).unwrap();
            for i in 0..2 {
                let fd = (yu[i] - yd[i]) / (2.0 * h);
                assert!((jac[i * 2 + j] - fd).abs() <= 1e-5 * scale, "t={t} x={x:?}");
            }
        }
        assert!((jac[1] - jac[2]).abs() <= 1e-8 * scale);
    }
}

#[test]
fn terminal_limits() {
    let gm = model("perturbedB").unwrap();
    let s = Schedule::constant(2.0).unwrap();
    let c = s.coeffs(1.0 - 1e-6).unwrap();
    let x = [1.3, -3.7];
    let post = probe_posterior(&gm, &c, &x).unwrap();
    for k in 0..9 {
        assert!((post.means[2 * k] - x[0]).abs() < 1e-4 && (post.means[2 * k + 1] - x[1]).abs() < 1e-4);
        assert!(post.covs[4 * k] < 1e-5);
    }
    let y = predicted_state(&gm, &c, &x).unwrap();
    assert!((y[0] - x[0]).abs() + (y[1] - x[1]).abs() < 1e-4);
    let r_pred = predicted_responsibilities(&gm, &c, &x).unwrap();
    let r = gm.responsibilities(&x);
    let sup = r.iter().zip(&r_pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(sup <= 1e-6, "{sup}");
}

#[test]
fn early_prediction_is_first_moment() {
    let gm = model("perturbedA").unwrap();
    let c = coeffs_const(1.0, 1e-7).unwrap();
    let y = predicted_state(&gm, &c, &[0.0, 0.0]).unwrap();
    let m = gm.first_moment();
    assert!((y[0] - m[0]).abs() < 1e-5 && (y[1] - m[1]).abs() < 1e-5, "{y:?} vs {m:?}");
}

#[test]
fn single_component_weight_is_one() {
    let gm = GaussianMixture::from_flat(2, vec![1.0], vec![1.0, 2.0], vec![0.5, 0.1, 0.1, 0.4]).unwrap();
    for (t, x) in [(0.1, [0.0, 0.0]), (0.9, [50.0, -3.0])] {
        let c = coeffs_const(3.0, t).unwrap();
        assert_eq!(probe_posterior(&gm, &c, &x).unwrap().weights, vec![1.0]);
        assert_eq!(gm.responsibilities(&x), vec![1.0]);
    }
}

#[test]
fn prediction_is_convex_combination_of_experts() {
    let gm = model("perturbedA").unwrap();
    let s = Schedule::constant(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let t = rng.random_range(0.01..0.99);
        let x = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
        let c = s.coeffs(t).unwrap();
        let post = probe_posterior(&gm, &c, &x).unwrap();
        assert!(post.weights.iter().all(|&w| w >= 0.0));
        assert!((post.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let y = predicted_state(&gm, &c, &x).unwrap();
        for i in 0..2 {
            let comb: f64 = (0..9).map(|k| post.weights[k] * post.means[2 * k + i]).sum();
            assert!((comb - y[i]).abs() < 1e-12);
            let lo = (0..9).map(|k| post.means[2 * k + i]).fold(f64::INFINITY, f64::min);
            let hi = (0..9).map(|k| post.means[2 * k + i]).fold(f64::NEG_INFINITY, f64::max);
            assert!(y[i] >= lo - 1e-12 && y[i] <= hi + 1e-12);
        }
    }
}

#[test]
fn log_space_survives_extremes() {
    let gm = model("perturbedB").unwrap();
    for k in [1e-3, 1.0, 1e4, 1e8] {
        let c = GreensCoeffs {
            t: 0.5,
            a_plus: 1.0,
            a_minus: k,
            b_minus: k,
            c_minus: k + 1.0,
            precision: k,
        };
        for x in [[1e3, -1e3], [0.0, 0.0], [-700.0, 20.0]] {
            let post = probe_posterior(&gm, &c, &x).unwrap();
            assert!(post.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max).is_finite());
            assert!(post.weights.iter().all(|w| w.is_finite()));
            assert!(predicted_state(&gm, &c, &x).unwrap().iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn responsibilities_at_grid_means() {
    let gm = regular3x3();
    for k in 0..9 {
        let r = gm.responsibilities(gm.mean(k));
        assert!(r[k] >= 0.99);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
