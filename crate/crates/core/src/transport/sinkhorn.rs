//! Log-domain Sinkhorn iterations with uniform marginals.
//!
//! Small targets are reached by ε-scaling: the potentials are warm-started
//! through a geometric ladder of larger ε before the final iterations.

use crate::linalg::log_sum_exp;

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornResult {
    /// `⟨Π, C⟩` of the final plan.
    pub transport_cost: f64,
    /// `⟨Π, C⟩` after every full sweep at the target ε.
    pub cost_trace: Vec<f64>,
    /// Dual objective `Σ a f + Σ b g` after every full sweep at the target ε.
    pub dual_trace: Vec<f64>,
    /// L1 row-marginal violation at exit (columns are exact after a sweep).
    pub marginal_error: f64,
    /// Sweeps at the target ε plus warm-up sweeps on the ladder.
    pub iterations: usize,
    pub converged: bool,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

const LADDER_RATIO: f64 = 0.5;
const WARM_SWEEPS: usize = 10;

#[allow(clippy::too_many_arguments)]
fn sweep(cost: &[f64], n: usize, m: usize, eps: f64, log_a: f64, log_b: f64, f: &mut [f64], g: &mut [f64], buf: &mut [f64]) {
    for i in 0..n {
        let row = &cost[i * m..(i + 1) * m];
        for j in 0..m {
            buf[j] = (g[j] - row[j]) / eps;
        }
        f[i] = eps * (log_a - log_sum_exp(&buf[..m]));
    }
    for j in 0..m {
        for i in 0..n {
            buf[i] = (f[i] - cost[i * m + j]) / eps;
        }
        g[j] = eps * (log_b - log_sum_exp(&buf[..n]));
    }
}

/// Cost matrix rows are `cost[i * m + j]`.
pub fn solve(cost: &[f64], n: usize, m: usize, epsilon: f64, max_iter: usize, tol: f64) -> SinkhornResult {
    assert_eq!(cost.len(), n * m);
    let log_a = -(n as f64).ln();
    let log_b = -(m as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut buf = vec![0.0; n.max(m)];
    let mut cost_trace = Vec::new();
    let mut dual_trace = Vec::new();
    let mut marginal_error = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    let top = cost.iter().copied().fold(0.0, f64::max);
    let mut stage = top.max(epsilon);
    while stage > epsilon && iterations < max_iter {
        for _ in 0..WARM_SWEEPS {
            sweep(cost, n, m, stage, log_a, log_b, &mut f, &mut g, &mut buf);
            iterations += 1;
        }
        stage = (stage * LADDER_RATIO).max(epsilon);
    }

    while iterations < max_iter {
        iterations += 1;
        sweep(cost, n, m, epsilon, log_a, log_b, &mut f, &mut g, &mut buf);
        let (value, err) = plan_stats(cost, n, m, &f, &g, epsilon, log_a);
        cost_trace.push(value);
        dual_trace.push(f.iter().sum::<f64>() / n as f64 + g.iter().sum::<f64>() / m as f64);
        marginal_error = err;
        if err <= tol {
            converged = true;
            break;
        }
    }

    SinkhornResult {
        transport_cost: *cost_trace.last().unwrap_or(&f64::NAN),
        cost_trace,
        dual_trace,
        marginal_error,
        iterations,
        converged,
        f,
        g,
    }
}

/// `⟨Π, C⟩` and the L1 row-marginal error of `Π = exp((f ⊕ g − C)/ε)`.
fn plan_stats(cost: &[f64], n: usize, m: usize, f: &[f64], g: &[f64], eps: f64, log_a: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut err = 0.0;
    let a = log_a.exp();
    for i in 0..n {
        let mut row_mass = 0.0;
        for j in 0..m {
            let c = cost[i * m + j];
            let p = ((f[i] + g[j] - c) / eps).exp();
            row_mass += p;
            value += p * c;
        }
        err += (row_mass - a).abs();
    }
    (value, err)
}

/// Row and column sums of the plan defined by potentials.
pub fn marginals(cost: &[f64], n: usize, m: usize, f: &[f64], g: &[f64], epsilon: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let p = ((f[i] + g[j] - cost[i * m + j]) / epsilon).exp();
            rows[i] += p;
            cols[j] += p;
        }
    }
    (rows, cols)
}
