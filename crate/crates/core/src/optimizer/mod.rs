//! Schedule search over scalar objectives built from the diagnostics.
//!
//! Every evaluation of an [`Objective`] simulates one ensemble per seed of
//! its [`Budget`]. Noise is keyed by `(seed, particle, step)`, so all
//! schedules evaluated with the same budget share their Brownian increments.

mod isocost;
mod pwc;
mod window;

pub use isocost::{iso_cost_level, refine_axis, two_piece_scan, IsoCostLevel, TwoPieceScan};
pub use pwc::{golden_section, optimize_pwc, PwcConfig, PwcResult, RefinementTrace, TraceEntry};
pub use window::{negative_window_scan, WindowScan};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{autocorrelations, cost_to_go, energy_regularized, omega_statistics, sharpness_regularized};
use crate::dynamics::{simulate_mixture, PathEnsemble, SimConfig};
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::transport::{self, Solver};

pub const DEFAULT_BETA_BOUNDS: (f64, f64) = (0.0, 25.0);
pub const W2_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const SPECIATION_GRID: [f64; 5] = [0.1, 1.0, 5.0, 10.0, 20.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Time-mean of `E‖Ω_t‖²₂` over the recorded midpoints.
    MeanOmegaSq,
    SharpnessReg { lambda_trans: f64, t_trans: f64 },
    EnergyReg { lambda_time: f64, t_trans: f64, a_level: f64 },
    KineticCost,
    TotalCost,
    /// `Ŵ₂` between terminal states and a fixed target sample.
    TerminalW2 { reference_size: usize, reference_seed: u64 },
}

impl ObjectiveKind {
    pub fn energy_reg_default() -> Self {
        Self::EnergyReg {
            lambda_time: 10.0,
            t_trans: 0.5,
            a_level: 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MeanOmegaSq => "mean_omega_sq",
            Self::SharpnessReg { .. } => "sharpness_reg",
            Self::EnergyReg { .. } => "energy_reg",
            Self::KineticCost => "kinetic_cost",
            Self::TotalCost => "total_cost",
            Self::TerminalW2 { .. } => "terminal_w2",
        }
    }
}

/// Ensemble size, step count and seed list for one objective evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub particles: usize,
    pub steps: usize,
    pub stride: usize,
    pub seeds: Vec<u64>,
}

impl Budget {
    pub fn new(particles: usize, steps: usize, seeds: Vec<u64>) -> Self {
        Self {
            particles,
            steps,
            stride: 1,
            seeds,
        }
    }

    /// `M = 2000`, `T = 300`.
    pub fn search(seeds: Vec<u64>) -> Self {
        Self::new(2000, 300, seeds)
    }

    /// `M = 5000`, `T = 500`.
    pub fn report(seeds: Vec<u64>) -> Self {
        Self::new(5000, 500, seeds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub mean: f64,
    /// Sample standard deviation over seeds; zero for one seed.
    pub sd: f64,
    pub values: Vec<f64>,
}

impl Evaluation {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, values }
    }
}

#[derive(Clone, Debug)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub budget: Budget,
    pub gm: GaussianMixture,
    reference: Option<Vec<f64>>,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, gm: GaussianMixture, budget: Budget) -> Result<Self> {
        if budget.seeds.is_empty() || budget.particles == 0 || budget.steps == 0 {
            return Err(Error::Config("objective budget needs M, T and at least one seed".into()));
        }
        let reference = match &kind {
            ObjectiveKind::TerminalW2 {
                reference_size,
                reference_seed,
            } => Some(gm.sample(*reference_size, *reference_seed)),
            _ => None,
        };
        Ok(Self {
            kind,
            budget,
            gm,
            reference,
        })
    }

    pub fn simulate(&self, schedule: &Schedule, seed: u64) -> Result<PathEnsemble> {
        let config = SimConfig::new("objective", schedule.clone(), self.budget.particles, self.budget.steps, seed)
            .with_stride(self.budget.stride);
        simulate_mixture(&self.gm, &config)
    }

    /// The scalar for one ensemble.
    pub fn score(&self, ensemble: &PathEnsemble, schedule: &Schedule) -> Result<f64> {
        let gm = &self.gm;
        let value = match &self.kind {
            ObjectiveKind::MeanOmegaSq => {
                let s = omega_statistics(ensemble, gm, schedule)?.mean_sq_operator;
                s.dense().iter().sum::<f64>() / s.len() as f64
            }
            ObjectiveKind::SharpnessReg { lambda_trans, t_trans } => {
                let a_hat = autocorrelations(ensemble, gm, schedule)?.a_hat;
                sharpness_regularized(&a_hat, *lambda_trans, *t_trans)
                    .ok_or_else(|| Error::Degenerate("sharpness undefined".into()))?
            }
            ObjectiveKind::EnergyReg {
                lambda_time,
                t_trans,
                a_level,
            } => {
                let a_hat = autocorrelations(ensemble, gm, schedule)?.a_hat;
                energy_regularized(ensemble, gm, &a_hat, *lambda_time, *t_trans, *a_level)?
            }
            ObjectiveKind::KineticCost => cost_to_go(ensemble, gm, schedule)?.terminal_kinetic,
            ObjectiveKind::TotalCost => cost_to_go(ensemble, gm, schedule)?.terminal_total,
            ObjectiveKind::TerminalW2 { .. } => {
                let reference = self.reference.as_ref().expect("reference sample");
                let m = ensemble.particles.min(reference.len() / ensemble.dim);
                let d = ensemble.dim;
                transport::w2(&ensemble.terminal[..m * d], &reference[..m * d], d, Solver::Auto)?.value
            }
        };
        if !value.is_finite() {
            return Err(Error::Degenerate(format!("objective {} is not finite", self.kind.name())));
        }
        Ok(value)
    }

    pub fn evaluate(&self, schedule: &Schedule) -> Result<Evaluation> {
        let values = self
            .budget
            .seeds
            .iter()
            .map(|&seed| self.score(&self.simulate(schedule, seed)?, schedule))
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluation::from_values(values))
    }

    /// Seed-mean value.
    pub fn value(&self, schedule: &Schedule) -> Result<f64> {
        Ok(self.evaluate(schedule)?.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub beta: f64,
    pub mean: f64,
    pub sd: f64,
    pub values: Vec<f64>,
}

/// Constant-β scan; rows follow the grid order.
pub fn grid_scan(objective: &Objective, betas: &[f64]) -> Result<Vec<ScanRow>> {
    if betas.is_empty() {
        return Err(Error::Config("β grid is empty".into()));
    }
    betas
        .par_iter()
        .map(|&beta| {
            let e = objective.evaluate(&Schedule::constant(beta)?)?;
            Ok(ScanRow {
                beta,
                mean: e.mean,
                sd: e.sd,
                values: e.values,
            })
        })
        .collect()
}

/// Row with the smallest mean.
pub fn argmin(rows: &[ScanRow]) -> Option<&ScanRow> {
    rows.iter().min_by(|a, b| a.mean.total_cmp(&b.mean))
}
