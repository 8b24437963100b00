//! Kinetic and total cost over the negative-window family `(B, δ)`.

use rayon::prelude::*;
use serde::Serialize;

use super::Budget;
use crate::diagnostics::cost_to_go;
use crate::dynamics::{simulate_mixture, SimConfig};
use crate::error::Result;
use crate::mixture::GaussianMixture;
use crate::schedule::{guard_negative_window, Schedule};

/// Row-major over `magnitudes × deltas`; `None` where the guard rejects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowScan {
    pub magnitudes: Vec<f64>,
    pub deltas: Vec<f64>,
    pub kinetic: Vec<Option<f64>>,
    pub total: Vec<Option<f64>>,
}

impl WindowScan {
    pub fn admissible(&self, i: usize, j: usize) -> bool {
        self.kinetic[i * self.deltas.len() + j].is_some()
    }

    fn argmin(&self, values: &[Option<f64>]) -> Option<(f64, f64)> {
        let nd = self.deltas.len();
        values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| (self.magnitudes[k / nd], self.deltas[k % nd]))
    }

    /// `(B, δ)` minimizing the kinetic cost.
    pub fn kinetic_argmin(&self) -> Option<(f64, f64)> {
        self.argmin(&self.kinetic)
    }

    pub fn total_argmin(&self) -> Option<(f64, f64)> {
        self.argmin(&self.total)
    }
}

/// Both costs come from one simulation per seed; inadmissible cells are
/// skipped without simulating.
pub fn negative_window_scan(gm: &GaussianMixture, budget: &Budget, magnitudes: &[f64], deltas: &[f64]) -> Result<WindowScan> {
    let cells: Vec<(f64, f64)> = magnitudes.iter().flat_map(|&b| deltas.iter().map(move |&d| (b, d))).collect();
    let results = cells
        .par_iter()
        .map(|&(b, d)| -> Result<Option<(f64, f64)>> {
            if !guard_negative_window(b, d).is_admissible() {
                return Ok(None);
            }
            let schedule = Schedule::negative_window(b, d)?;
            let (mut kin, mut tot) = (0.0, 0.0);
            for &seed in &budget.seeds {
                let config = SimConfig::new("window", schedule.clone(), budget.particles, budget.steps, seed)
                    .with_stride(budget.stride);
                let e = simulate_mixture(gm, &config)?;
                let c = cost_to_go(&e, gm, &schedule)?;
                kin += c.terminal_kinetic;
                tot += c.terminal_total;
            }
            let n = budget.seeds.len() as f64;
            Ok(Some((kin / n, tot / n)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowScan {
        magnitudes: magnitudes.to_vec(),
        deltas: deltas.to_vec(),
        kinetic: results.iter().map(|r| r.map(|p| p.0)).collect(),
        total: results.iter().map(|r| r.map(|p| p.1)).collect(),
    })
}
