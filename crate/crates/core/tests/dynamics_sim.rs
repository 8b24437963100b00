use adapid_core::dynamics::{
    map_predicted, midpoint, simulate, simulate_field, simulate_mixture, OptimalDrift, SimConfig, ZeroDrift,
    DriftField,
};
use adapid_core::mixture::{GaussianMixture, PosteriorScratch};
use adapid_core::models::regular3x3;
use adapid_core::noise::noise_increments;
use adapid_core::schedule::Schedule;

#[test]
fn reruns_are_bit_identical() {
    let cfg = SimConfig::new("perturbedA", Schedule::pwc(vec![0.0, 3.0]).unwrap(), 3, 10, 77);
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.times.iter().all(|&t| t > 0.0 && t < 1.0));
    assert_eq!(a.times[0], 0.05);
}

#[test]
fn zero_drift_is_brownian() {
    let m = 100_000;
    let cfg = SimConfig::new("regular3x3", Schedule::constant(0.0).unwrap(), m, 20, 5).with_stride(5);
    let ens = simulate_field(&ZeroDrift { dim: 2 }, &cfg).unwrap();
    for j in 0..ens.snapshots() {
        // the snapshot at step n holds x_{n+1}, a Brownian state at time (n+1)/T
        let t_state = (ens.step_indices[j] + 1) as f64 / 20.0;
        let snap = ens.snapshot(j);
        for i in 0..2 {
            let var = snap.iter().skip(i).step_by(2).map(|v| v * v).sum::<f64>() / m as f64;
            let se = t_state * (2.0 / m as f64).sqrt();
            assert!((var - t_state).abs() <= 4.0 * se, "t={t_state}: {var}");
        }
    }
}

#[test]
fn simulator_consumes_the_keyed_noise() {
    let (m, t) = (4, 12);
    let cfg = SimConfig::new("regular3x3", Schedule::constant(0.0).unwrap(), m, t, 9);
    let ens = simulate_field(&ZeroDrift { dim: 2 }, &cfg).unwrap();
    let xi = noise_increments(9, m, t, 2);
    let h = 1.0 / t as f64;
    for p in 0..m {
        let mut x = [0.0; 2];
        for n in 0..t {
            for i in 0..2 {
                x[i] += h.sqrt() * xi[(p * t + n) * 2 + i];
            }
            assert_eq!(ens.state(p, n), &x);
        }
    }
}

/// Recovers `ξ_n = (x_{n+1} − x_n − h u(x_n)) / √h` from a stride-1 run.
fn recovered_noise(schedule: Schedule) -> Vec<f64> {
    let gm = regular3x3();
    let (m, t) = (5, 40);
    let cfg = SimConfig::new("regular3x3", schedule.clone(), m, t, 31);
    let ens = simulate_mixture(&gm, &cfg).unwrap();
    let field = OptimalDrift::new(&gm, &schedule, t).unwrap();
    let mut scratch = field.scratch();
    let h = 1.0 / t as f64;
    let mut out = Vec::new();
    for p in 0..m {
        let mut prev = vec![0.0; 2];
        for n in 0..t {
            let mut u = [0.0; 2];
            field.drift(n, &prev, &mut scratch, &mut u);
            let next = ens.state(p, n);
            for i in 0..2 {
                out.push((next[i] - prev[i] - h * u[i]) / h.sqrt());
            }
            prev = next.to_vec();
        }
    }
    out
}

#[test]
fn common_random_numbers_across_schedules() {
    let a = recovered_noise(Schedule::constant(0.5).unwrap());
    let b = recovered_noise(Schedule::pwc(vec![0.0, 8.0, 2.0]).unwrap());
    let xi = noise_increments(31, 5, 40, 2);
    for ((x, y), z) in a.iter().zip(&b).zip(&xi) {
        assert!((x - z).abs() < 1e-9 && (y - z).abs() < 1e-9);
    }
}

#[test]
fn predicted_map_limits() {
    let gm = regular3x3();
    let schedule = Schedule::constant(1.0).unwrap();
    let cfg = SimConfig::new("regular3x3", schedule.clone(), 200, 2000, 4).with_stride(100);
    let ens = simulate_mixture(&gm, &cfg).unwrap();
    let pred = map_predicted(&ens, &gm, &schedule).unwrap();
    let last = ens.snapshots() - 1;
    let mut sup_last: f64 = 0.0;
    let mut sq_last = 0.0;
    let mut mean_first = [0.0; 2];
    for m in 0..ens.particles {
        let base = (m * ens.snapshots() + last) * 2;
        for i in 0..2 {
            let gap = (pred[base + i] - ens.state(m, last)[i]).abs();
            sup_last = sup_last.max(gap);
            sq_last += gap * gap;
            mean_first[i] += pred[m * ens.snapshots() * 2 + i] / ens.particles as f64;
        }
    }
    // ŷ − x ≈ (1 − t)(a⁺₁ x + Σ⁻¹(μ − x)); with |x| ≈ 4 that is ~1e-3 at T = 2000
    let rms_last = (sq_last / (2 * ens.particles) as f64).sqrt();
    assert!(rms_last <= 2e-3, "{rms_last}");
    assert!(sup_last <= 5e-3, "{sup_last}");
    // x ≈ 0 after one step and ŷ is linear there with slope b⁻·Cov ≈ 9, so
    // the ensemble mean of ŷ sits at the mixture mean 0
    assert!(mean_first.iter().all(|v| v.abs() <= 0.05), "{mean_first:?}");
}

#[test]
fn single_gaussian_prediction_series_is_linear() {
    let (mu, var) = (1.5, 0.4);
    let gm = GaussianMixture::from_flat(1, vec![1.0], vec![mu], vec![var]).unwrap();
    let schedule = Schedule::pwc(vec![2.0, 0.5]).unwrap();
    let cfg = SimConfig::new("unused", schedule.clone(), 20, 50, 8).with_stride(7);
    let ens = simulate_mixture(&gm, &cfg).unwrap();
    let pred = map_predicted(&ens, &gm, &schedule).unwrap();
    for m in 0..20 {
        for (j, &t) in ens.times.iter().enumerate() {
            let c = schedule.coeffs(t).unwrap();
            let x = ens.state(m, j)[0];
            let want = (mu / var + c.b_minus * x) / (1.0 / var + c.precision);
            assert!((pred[m * ens.snapshots() + j] - want).abs() < 1e-12);
        }
    }
    // drift slope b⁻·b⁻/(1/σ² + K) − a⁻
    let c = schedule.coeffs(0.3).unwrap();
    let field = OptimalDrift::at_times(&gm, &schedule, &[0.3]).unwrap();
    let mut s = PosteriorScratch::new(&gm);
    let (mut u0, mut u1) = ([0.0], [0.0]);
    field.drift(0, &[0.0], &mut s, &mut u0);
    field.drift(0, &[1.0], &mut s, &mut u1);
    let slope = c.b_minus * c.b_minus / (1.0 / var + c.precision) - c.a_minus;
    assert!((u1[0] - u0[0] - slope).abs() < 1e-12);
}

#[test]
fn binary_and_csv_export() {
    let cfg = SimConfig::new("perturbedB", Schedule::constant(2.0).unwrap(), 6, 30, 2).with_stride(7);
    let ens = simulate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paths.bin");
    ens.write_binary(&path).unwrap();
    let back = adapid_core::PathEnsemble::read_binary(&path).unwrap();
    assert_eq!(back.states, ens.states);
    assert_eq!(back.terminal, ens.terminal);
    assert_eq!(back.times, ens.times);
    assert_eq!(back.step_indices, ens.step_indices);
    let mut csv = Vec::new();
    ens.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 * ens.snapshots());
    assert_eq!(midpoint(0, 30), 1.0 / 60.0);
}

#[test]
fn divergence_is_reported() {
    // a window right at the guard edge still runs; an exploding drift does not
    struct Explode;
    impl DriftField for Explode {
        type Scratch = ();
        fn dim(&self) -> usize {
            1
        }
        fn scratch(&self) {}
        fn drift(&self, _: usize, x: &[f64], _: &mut (), out: &mut [f64]) {
            out[0] = 1e4 * (x[0] + 1.0);
        }
    }
    let cfg = SimConfig::new("regular3x3", Schedule::constant(0.0).unwrap(), 3, 100, 1);
    let err = simulate_field(&Explode, &cfg).unwrap_err();
    assert!(matches!(err, adapid_core::Error::Simulation { particle: 0, .. }));
}
