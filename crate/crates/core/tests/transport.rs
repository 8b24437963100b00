use adapid_core::models::regular3x3;
use adapid_core::transport::{
    self, assignment, auc_early_exit, cost_matrix, median_cost, normalize_shape, sinkhorn, w2_exact, w2_localized,
    w2_sinkhorn, w2_tail, w2_time_series, Solver, LOCALIZED_MIN_COUNT,
};
use adapid_core::{simulate, Error, Schedule, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<f64> {
    (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_w2(x: &[f64], y: &[f64], dim: usize) -> f64 {
    let n = x.len() / dim;
    let c = cost_matrix(x, y, dim);
    permutations(n)
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| c[i * n + j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        / n as f64
}

#[test]
fn exact_matches_permutation_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for instance in 0..200 {
        let n = 1 + instance % 6;
        let dim = 1 + instance % 3;
        let x = cloud(&mut rng, n, dim);
        let y = cloud(&mut rng, n, dim);
        let r = w2_exact(&x, &y, dim).unwrap();
        let brute = brute_w2(&x, &y, dim);
        assert!((r.squared - brute).abs() <= 1e-12 * brute.max(1.0), "instance {instance}");
        assert_eq!(r.matched, n);
    }
}

#[test]
fn exact_handles_ties_and_duplicates() {
    let x = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
    let y = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    assert_eq!(w2_exact(&x, &y, 2).unwrap().value, 0.0);
    let c = vec![1.0; 49];
    let a = assignment::solve(7, |i: usize, j: usize| c[i * 7 + j]);
    assert_eq!(a.cost, 7.0);
}

#[test]
fn identical_sets_have_zero_distance() {
    let x = regular3x3().sample(300, 3);
    assert_eq!(w2_exact(&x, &x, 2).unwrap().value, 0.0);
}

#[test]
fn metric_symmetry_and_triangle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.random_range(2..12);
        let (x, y, z) = (cloud(&mut rng, n, 2), cloud(&mut rng, n, 2), cloud(&mut rng, n, 2));
        let xy = w2_exact(&x, &y, 2).unwrap().value;
        let yx = w2_exact(&y, &x, 2).unwrap().value;
        let yz = w2_exact(&y, &z, 2).unwrap().value;
        let xz = w2_exact(&x, &z, 2).unwrap().value;
        assert!((xy - yx).abs() <= 1e-12);
        assert!(xz <= xy + yz + 1e-9);
    }
}

#[test]
fn sinkhorn_approaches_exact_at_small_epsilon() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x = cloud(&mut rng, 64, 2);
        let y = cloud(&mut rng, 64, 2);
        let exact = w2_exact(&x, &y, 2).unwrap();
        let eps = 1e-3 * median_cost(&x, &y, 2);
        let s = w2_sinkhorn(&x, &y, 2, eps, 20_000, 1e-9).unwrap();
        assert!((s.value - exact.value).abs() / exact.value <= 0.02, "{} vs {}", s.value, exact.value);
        assert!(exact.squared <= s.squared + 1e-9);
    }
}

#[test]
fn sinkhorn_self_distance_shrinks_with_epsilon() {
    let x = regular3x3().sample(64, 9);
    let med = median_cost(&x, &x, 2);
    let values: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|f| w2_sinkhorn(&x, &x, 2, f * med, 20_000, 1e-10).unwrap().squared)
        .collect();
    assert!(values[0] > values[1] && values[1] > values[2]);
    assert!(values[2] < 1e-3 * med);
}

#[test]
fn sinkhorn_marginals_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (x, y) = (cloud(&mut rng, 40, 2), cloud(&mut rng, 40, 2));
    let c = cost_matrix(&x, &y, 2);
    let eps = 1e-1 * median_cost(&x, &y, 2);
    let tol = 1e-10;
    let r = sinkhorn::solve(&c, 40, 40, eps, 10_000, tol);
    assert!(r.converged);
    let (rows, cols) = sinkhorn::marginals(&c, 40, 40, &r.f, &r.g, eps);
    let row_err: f64 = rows.iter().map(|v| (v - 1.0 / 40.0).abs()).sum();
    let col_err: f64 = cols.iter().map(|v| (v - 1.0 / 40.0).abs()).sum();
    assert!(row_err <= tol && col_err <= 1e-12);
}

#[test]
fn sinkhorn_dual_trace_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let (x, y) = (cloud(&mut rng, 50, 2), cloud(&mut rng, 50, 2));
        let c = cost_matrix(&x, &y, 2);
        let eps = 1e-2 * median_cost(&x, &y, 2);
        let r = sinkhorn::solve(&c, 50, 50, eps, 2000, 1e-12);
        for w in r.dual_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "dual decreased: {w:?}");
        }
        assert_eq!(r.cost_trace.len(), r.dual_trace.len());
    }
}

#[test]
fn size_mismatch_is_an_error() {
    let err = w2_exact(&[0.0, 1.0, 2.0], &[0.0, 1.0], 1).unwrap_err();
    assert!(matches!(err, Error::SizeMismatch { left: 3, right: 2 }));
}

#[test]
fn tail_restriction() {
    let gm = regular3x3();
    let x = gm.sample(600, 21);
    let y = gm.sample(600, 22);
    let full = w2_exact(&x, &y, 2).unwrap();
    let all = w2_tail(&x, &y, &gm, 1.0, 0).unwrap();
    assert_eq!(all.matched, 600);
    assert!((all.squared - full.squared).abs() <= 1e-12);

    let q = 0.1;
    let tail = w2_tail(&x, &y, &gm, q, 0).unwrap();
    let expected = q * 600.0;
    assert!((tail.matched as f64) <= expected + 1.0);
    assert!((tail.matched as f64) >= 0.5 * expected, "n_q = {}", tail.matched);
    assert_eq!(tail.seed, Some(0));

    assert_eq!(w2_tail(&x, &x, &gm, 0.05, 3).unwrap().value, 0.0);
    assert!(w2_tail(&x, &y, &gm, 0.0, 0).is_err());
}

#[test]
fn localized_restriction() {
    let gm = regular3x3();
    let x = gm.sample(500, 31);
    let y = gm.sample(500, 32);
    let full = w2_exact(&x, &y, 2).unwrap();
    let everything = w2_localized(&x, &y, 2, f64::INFINITY, LOCALIZED_MIN_COUNT, 0).unwrap();
    assert_eq!(everything.matched, 500);
    assert!((everything.squared - full.squared).abs() <= 1e-12);

    assert_eq!(w2_localized(&x, &x, 2, 2.0, LOCALIZED_MIN_COUNT, 0).unwrap().value, 0.0);

    let err = w2_localized(&x, &y, 2, 0.05, LOCALIZED_MIN_COUNT, 0).unwrap_err();
    assert!(matches!(err, Error::InsufficientMass { required: 16, .. }));
}

#[test]
fn time_series_auc_and_shape() {
    let gm = regular3x3();
    let reference = gm.sample(400, 99);
    let schedule = Schedule::constant(2.0).unwrap();
    let config = SimConfig::new("regular3x3", schedule, 400, 100, 4).with_stride(10);
    let ensemble = simulate(&config).unwrap();
    let series = w2_time_series(&ensemble, &reference, Solver::Exact).unwrap();
    assert_eq!(series.len(), ensemble.snapshots());
    assert_eq!(series.particles, 400);
    let shape = normalize_shape(&series).unwrap();
    assert!((shape.last().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(auc_early_exit(&series, 0.0), Some(0.0));
    let half = auc_early_exit(&series, 0.5).unwrap();
    let whole = auc_early_exit(&series, 1.0).unwrap();
    assert!(half > 0.0 && half < whole);
    assert_eq!(transport::auc_early_exit(&series, 1.0), series.integral());
}

#[test]
fn w2_decreases_toward_terminal_for_constant_beta() {
    let gm = regular3x3();
    let reference = gm.sample(300, 1234);
    let schedule = Schedule::constant(2.0).unwrap();
    let mut mean: Vec<f64> = Vec::new();
    let seeds = 10;
    for seed in 0..seeds {
        let config = SimConfig::new("regular3x3", schedule.clone(), 300, 100, seed).with_stride(20);
        let ensemble = simulate(&config).unwrap();
        let series = w2_time_series(&ensemble, &reference, Solver::Exact).unwrap();
        let dense = series.dense();
        if mean.is_empty() {
            mean = vec![0.0; dense.len()];
        }
        for (m, v) in mean.iter_mut().zip(dense) {
            *m += v / seeds as f64;
        }
    }
    for w in mean.windows(2) {
        assert!(w[1] < w[0] + 0.02, "{mean:?}");
    }
    assert!(mean.last().unwrap() < &(0.5 * mean[0]));
}
