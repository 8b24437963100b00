//! Empirical 2-Wasserstein distances between equally weighted point clouds.
//!
//! Point sets are flat `n × d` slices. The exact estimator solves the
//! balanced assignment problem on squared Euclidean costs; above
//! [`EXACT_LIMIT`] points the entropic (Sinkhorn) estimator takes over.

pub mod assignment;
pub mod sinkhorn;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::PathEnsemble;
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::series::DiagnosticSeries;

pub const EXACT_LIMIT: usize = 6000;
pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-2;
pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const LOCALIZED_MIN_COUNT: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum W2Method {
    Exact,
    Sinkhorn { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct W2Report {
    pub value: f64,
    pub squared: f64,
    pub method: W2Method,
    pub matched: usize,
    /// Sinkhorn only: false when the iteration cap was hit first.
    pub converged: bool,
    pub seed: Option<u64>,
}

impl W2Report {
    fn new(squared: f64, method: W2Method, matched: usize) -> Self {
        Self {
            value: squared.max(0.0).sqrt(),
            squared,
            method,
            matched,
            converged: true,
            seed: None,
        }
    }
}

/// How to pick the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solver {
    /// Exact up to [`EXACT_LIMIT`] points, Sinkhorn with the default ε above.
    Auto,
    Exact,
    /// `epsilon = None` uses `1e-2 · median(C)`.
    Sinkhorn { epsilon: Option<f64> },
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

fn count(points: &[f64], dim: usize) -> usize {
    assert!(dim > 0 && points.len() % dim == 0, "point buffer is not a multiple of d");
    points.len() / dim
}

pub fn cost_matrix(x: &[f64], y: &[f64], dim: usize) -> Vec<f64> {
    let (n, m) = (count(x, dim), count(y, dim));
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            c[i * m + j] = sq_dist(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]);
        }
    }
    c
}

/// Median squared distance, from all pairs when `n·m ≤ 10⁶` and from a
/// deterministic stride through the pairs otherwise.
pub fn median_cost(x: &[f64], y: &[f64], dim: usize) -> f64 {
    let (n, m) = (count(x, dim), count(y, dim));
    let total = n * m;
    let stride = total.div_ceil(1_000_000).max(1);
    let mut vals: Vec<f64> = (0..total)
        .step_by(stride)
        .map(|p| {
            let (i, j) = (p / m, p % m);
            sq_dist(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim])
        })
        .collect();
    let mid = vals.len() / 2;
    let (_, v, _) = vals.select_nth_unstable_by(mid, f64::total_cmp);
    *v
}

pub fn w2_exact(x: &[f64], y: &[f64], dim: usize) -> Result<W2Report> {
    let (n, m) = (count(x, dim), count(y, dim));
    if n != m {
        return Err(Error::SizeMismatch { left: n, right: m });
    }
    if n == 0 {
        return Err(Error::Degenerate("empty point sets".into()));
    }
    let a = assignment::solve(n, assignment::SquaredEuclidean { x, y, dim });
    Ok(W2Report::new(a.cost / n as f64, W2Method::Exact, n))
}

pub fn w2_sinkhorn(x: &[f64], y: &[f64], dim: usize, epsilon: f64, max_iter: usize, tol: f64) -> Result<W2Report> {
    let (n, m) = (count(x, dim), count(y, dim));
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("Sinkhorn ε = {epsilon} must be positive")));
    }
    if n == 0 || m == 0 {
        return Err(Error::Degenerate("empty point sets".into()));
    }
    let c = cost_matrix(x, y, dim);
    let r = sinkhorn::solve(&c, n, m, epsilon, max_iter, tol);
    let mut report = W2Report::new(r.transport_cost, W2Method::Sinkhorn { epsilon }, n.min(m));
    report.converged = r.converged;
    Ok(report)
}

pub fn w2(x: &[f64], y: &[f64], dim: usize, solver: Solver) -> Result<W2Report> {
    let n = count(x, dim);
    let sinkhorn = |eps: Option<f64>| {
        let eps = eps.unwrap_or_else(|| DEFAULT_EPSILON_FACTOR * median_cost(x, y, dim));
        w2_sinkhorn(x, y, dim, eps, DEFAULT_MAX_ITER, DEFAULT_TOL)
    };
    match solver {
        Solver::Exact => w2_exact(x, y, dim),
        Solver::Auto if n <= EXACT_LIMIT => w2_exact(x, y, dim),
        Solver::Auto => sinkhorn(None),
        Solver::Sinkhorn { epsilon } => sinkhorn(epsilon),
    }
}

fn gather(points: &[f64], dim: usize, rows: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * dim);
    for &r in rows {
        out.extend_from_slice(&points[r * dim..(r + 1) * dim]);
    }
    out
}

/// Seeded subsample of `keep` out of `rows`, preserving the original order.
fn subsample(rows: &[usize], keep: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if keep >= rows.len() {
        return rows.to_vec();
    }
    let mut picked: Vec<usize> = index::sample(rng, rows.len(), keep).into_iter().collect();
    picked.sort_unstable();
    picked.into_iter().map(|p| rows[p]).collect()
}

/// Balances two index sets by subsampling and matches the survivors exactly.
fn balanced_exact(x: &[f64], y: &[f64], dim: usize, ix: &[usize], iy: &[usize], seed: u64) -> Result<W2Report> {
    let keep = ix.len().min(iy.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sx = subsample(ix, keep, &mut rng);
    let sy = subsample(iy, keep, &mut rng);
    let mut r = w2_exact(&gather(x, dim, &sx), &gather(y, dim, &sy), dim)?;
    r.seed = Some(seed);
    Ok(r)
}

/// Restricts both sets to the low-density tail `p(·) ≤ τ_q`, with `τ_q` the
/// empirical `q`-quantile of `p` over the reference set `y`. At `q = 1` the
/// threshold is unbounded and every point is kept.
pub fn w2_tail(x: &[f64], y: &[f64], gm: &GaussianMixture, q: f64, seed: u64) -> Result<W2Report> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Config(format!("tail level q = {q} must lie in (0, 1]")));
    }
    let dim = gm.dim();
    let dens = |pts: &[f64]| -> Vec<f64> { pts.chunks(dim).map(|p| gm.log_density(p)).collect() };
    let (dx, dy) = (dens(x), dens(y));
    let mut sorted = dy.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Err(Error::EmptyTail);
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    let tau = if q == 1.0 { f64::INFINITY } else { sorted[rank] };
    let ix: Vec<usize> = (0..dx.len()).filter(|&i| dx[i] <= tau).collect();
    let iy: Vec<usize> = (0..dy.len()).filter(|&i| dy[i] <= tau).collect();
    if ix.is_empty() || iy.is_empty() {
        return Err(Error::EmptyTail);
    }
    balanced_exact(x, y, dim, &ix, &iy, seed)
}

/// Restricts both sets to the ball `‖·‖ ≤ r`.
pub fn w2_localized(x: &[f64], y: &[f64], dim: usize, radius: f64, min_count: usize, seed: u64) -> Result<W2Report> {
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius r = {radius} must be positive")));
    }
    let inside = |pts: &[f64]| -> Vec<usize> {
        pts.chunks(dim)
            .enumerate()
            .filter(|(_, p)| p.iter().map(|v| v * v).sum::<f64>() <= radius * radius)
            .map(|(i, _)| i)
            .collect()
    };
    let (ix, iy) = (inside(x), inside(y));
    let found = ix.len().min(iy.len());
    if found < min_count.max(1) {
        return Err(Error::InsufficientMass {
            radius,
            found,
            required: min_count.max(1),
        });
    }
    balanced_exact(x, y, dim, &ix, &iy, seed)
}

/// `W₂(t)` between every recorded snapshot and one fixed reference set.
pub fn w2_time_series(ensemble: &PathEnsemble, reference: &[f64], solver: Solver) -> Result<DiagnosticSeries> {
    let values = (0..ensemble.snapshots())
        .map(|j| w2(&ensemble.snapshot(j), reference, ensemble.dim, solver).map(|r| Some(r.value)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticSeries::new("w2", ensemble.times.clone(), values).with_provenance(
        ensemble.particles,
        ensemble.seed,
        &ensemble.schedule_label,
    ))
}

/// Area under the series on `[0, t⋆]`.
pub fn auc_early_exit(series: &DiagnosticSeries, t_star: f64) -> Option<f64> {
    series.integral_to(t_star)
}

/// Series divided by its terminal value.
pub fn normalize_shape(series: &DiagnosticSeries) -> Result<DiagnosticSeries> {
    let last = series
        .last()
        .filter(|v| *v != 0.0)
        .ok_or_else(|| Error::Degenerate(format!("series `{}` has no usable terminal value", series.name)))?;
    let mut out = series.clone();
    out.name = format!("{}_shape", series.name);
    out.values = series.values.iter().map(|v| v.map(|x| x / last)).collect();
    Ok(out)
}
