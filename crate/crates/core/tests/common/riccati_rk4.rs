//! Independent RK4 integration of the coefficient ODEs, used as an oracle.
//!
//! Backward branch from `t = 1 − 1e-6` with the terminal series, forward
//! branch from `t = 1e-6` with the initial series; steps shrink
//! geometrically near the singular end and always land on piece edges.

pub struct Rk4Oracle {
    edges: Vec<f64>,
    betas: Vec<f64>,
}

const START: f64 = 1e-6;
const REL_STEP: f64 = 2e-3;
const MAX_STEP: f64 = 1e-4;

impl Rk4Oracle {
    pub fn new(edges: Vec<f64>, betas: Vec<f64>) -> Self {
        assert_eq!(edges.len(), betas.len() + 1);
        Self { edges, betas }
    }

    fn beta(&self, t_mid: f64) -> f64 {
        let k = self.edges[1..].iter().position(|&e| t_mid < e).unwrap_or(self.betas.len() - 1);
        self.betas[k]
    }

    fn stops(&self, queries: &[f64]) -> Vec<f64> {
        let mut stops: Vec<f64> = queries.to_vec();
        stops.extend_from_slice(&self.edges[1..self.edges.len() - 1]);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        stops
    }

    /// `(a⁻, b⁻, c⁻)` at each query time.
    pub fn backward(&self, queries: &[f64]) -> Vec<[f64; 3]> {
        let stops = self.stops(queries);
        let beta_end = *self.betas.last().unwrap();
        let s = START;
        let mut y = [
            1.0 / s + beta_end * s / 3.0,
            1.0 / s - beta_end * s / 6.0,
            1.0 / s + beta_end * s / 3.0,
        ];
        let mut t = 1.0 - s;
        let mut out = vec![[0.0; 3]; queries.len()];
        for &stop in stops.iter().rev() {
            while t > stop {
                let h = (REL_STEP * (1.0 - t)).min(MAX_STEP).min(t - stop);
                let beta = self.beta(t - 0.5 * h);
                let f = |y: [f64; 3]| [y[0] * y[0] - beta, y[0] * y[1], y[1] * y[1]];
                y = rk4_step(y, -h, f);
                t = if t - h <= stop { stop } else { t - h };
            }
            for (q, slot) in queries.iter().zip(out.iter_mut()) {
                if *q == stop {
                    *slot = y;
                }
            }
        }
        out
    }

    /// `a⁺` at each query time.
    pub fn forward(&self, queries: &[f64]) -> Vec<f64> {
        let stops = self.stops(queries);
        let beta0 = self.betas[0];
        let mut t = START;
        let mut y = [1.0 / t + beta0 * t / 3.0];
        let mut out = vec![0.0; queries.len()];
        for &stop in &stops {
            while t < stop {
                let h = (REL_STEP * t).min(MAX_STEP).min(stop - t);
                let beta = self.beta(t + 0.5 * h);
                y = rk4_step(y, h, |y: [f64; 1]| [beta - y[0] * y[0]]);
                t = if t + h >= stop { stop } else { t + h };
            }
            for (q, slot) in queries.iter().zip(out.iter_mut()) {
                if *q == stop {
                    *slot = y[0];
                }
            }
        }
        out
    }

    /// `a⁺` integrated all the way to `t = 1`.
    pub fn forward_terminal(&self) -> f64 {
        self.forward(&[1.0])[0]
    }
}

fn rk4_step<const N: usize>(y: [f64; N], h: f64, f: impl Fn([f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: [f64; N], b: [f64; N], s: f64| {
        let mut r = a;
        for i in 0..N {
            r[i] += s * b[i];
        }
        r
    };
    let k1 = f(y);
    let k2 = f(add(y, k1, 0.5 * h));
    let k3 = f(add(y, k2, 0.5 * h));
    let k4 = f(add(y, k3, h));
    let mut r = y;
    for i in 0..N {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r
}
