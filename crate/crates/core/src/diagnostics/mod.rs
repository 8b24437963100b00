//! Sampling-quality diagnostics evaluated along a simulated path ensemble.
//!
//! Every statistic is a particle average at each recorded snapshot `t_j`,
//! using the recorded state `x_j` and the optimal drift coefficients at `t_j`.
//! Particles are reduced in fixed blocks whose partial sums are combined in
//! order, so results do not depend on the thread count.

mod balance;
mod correlation;
mod cost;
mod energy;
mod gradient;
mod speciation;

pub use balance::{drift_diffusion, langevin_mismatch, langevin_terms, DriftDiffusion, LangevinMismatch, DEFAULT_EPS_FLOOR};
pub use correlation::{autocorrelations, sharpness, sharpness_regularized, transition_time, Autocorrelations};
pub use cost::{cost_to_go, CostBreakdown};
pub use energy::{cross_entropy_series, energy_objective, energy_regularized, energy_series, CrossEntropy};
pub use gradient::{omega_statistics, OmegaSample, OmegaStatistics, RADIAL_FLOOR};
pub use speciation::{binary_entropy, dominance_violation, speciation, Speciation, SpeciationConfig};

use std::ops::Range;

use rayon::prelude::*;

use crate::dynamics::{OptimalDrift, PathEnsemble};
use crate::error::Result;
use crate::mixture::{GaussianMixture, PosteriorScratch};
use crate::schedule::{GreensCoeffs, Schedule};
use crate::series::DiagnosticSeries;

const BLOCK: usize = 64;

/// What a sweep needs per sample beyond the state itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Need {
    State,
    Prediction,
    Jacobian,
}

pub(crate) struct Sample<'s> {
    pub t: f64,
    pub x: &'s [f64],
    /// `ŷ(t; x)`; empty under [`Need::State`].
    pub y_hat: &'s [f64],
    /// `u*(t; x)`; empty under [`Need::State`].
    pub u: &'s [f64],
    /// `∂ŷ/∂x`, row-major; empty unless [`Need::Jacobian`].
    pub jac: &'s [f64],
    /// Present unless [`Need::State`].
    pub coeffs: Option<&'s GreensCoeffs>,
    pub terminal: &'s [f64],
}

pub(crate) struct PathContext<'a> {
    pub ensemble: &'a PathEnsemble,
    pub gm: &'a GaussianMixture,
    field: Option<OptimalDrift<'a>>,
}

struct Walker {
    scratch: PosteriorScratch,
    y_hat: Vec<f64>,
    u: Vec<f64>,
    jac: Vec<f64>,
}

impl<'a> PathContext<'a> {
    pub fn new(ensemble: &'a PathEnsemble, gm: &'a GaussianMixture, schedule: &Schedule) -> Result<Self> {
        let mut ctx = Self::states_only(ensemble, gm)?;
        ctx.field = Some(OptimalDrift::at_times(gm, schedule, &ensemble.times)?);
        Ok(ctx)
    }

    /// A context that can only serve [`Need::State`] sweeps.
    pub fn states_only(ensemble: &'a PathEnsemble, gm: &'a GaussianMixture) -> Result<Self> {
        if ensemble.dim != gm.dim() {
            return Err(crate::Error::SizeMismatch {
                left: ensemble.dim,
                right: gm.dim(),
            });
        }
        Ok(Self {
            ensemble,
            gm,
            field: None,
        })
    }

    pub fn snapshots(&self) -> usize {
        self.ensemble.snapshots()
    }

    pub fn particles(&self) -> usize {
        self.ensemble.particles
    }

    fn field(&self) -> &OptimalDrift<'a> {
        self.field.as_ref().expect("sweep needs the drift field")
    }

    /// Runs `f` on consecutive particle blocks in parallel; results come back
    /// in block order.
    pub fn blocks<R: Send>(&self, f: impl Fn(Range<usize>) -> R + Sync) -> Vec<R> {
        let m = self.particles();
        let starts: Vec<usize> = (0..m).step_by(BLOCK).collect();
        starts.into_par_iter().map(|s| f(s..(s + BLOCK).min(m))).collect()
    }

    fn walker(&self) -> Walker {
        let d = self.ensemble.dim;
        Walker {
            scratch: PosteriorScratch::new(self.gm),
            y_hat: vec![0.0; d],
            u: vec![0.0; d],
            jac: vec![0.0; d * d],
        }
    }

    /// Visits every snapshot of each particle in `range`, in order.
    pub fn walk(&self, range: Range<usize>, need: Need, mut f: impl FnMut(usize, usize, &Sample)) {
        let d = self.ensemble.dim;
        let mut w = self.walker();
        for m in range {
            let terminal = self.ensemble.terminal_state(m);
            for j in 0..self.snapshots() {
                let x = self.ensemble.state(m, j);
                let (y_hat, u, jac, coeffs): (&[f64], &[f64], &[f64], Option<&GreensCoeffs>) = match need {
                    Need::State => (&[], &[], &[], None),
                    Need::Prediction | Need::Jacobian => {
                        let op = self.field().operator(j);
                        let coeffs = op.coeffs();
                        if need == Need::Jacobian {
                            op.predicted_jacobian_into(x, &mut w.scratch, &mut w.y_hat, &mut w.jac);
                        } else {
                            op.predicted_state_into(x, &mut w.scratch, &mut w.y_hat);
                        }
                        for i in 0..d {
                            w.u[i] = coeffs.b_minus * w.y_hat[i] - coeffs.a_minus * x[i];
                        }
                        let jac: &[f64] = if need == Need::Jacobian { &w.jac } else { &[] };
                        (&w.y_hat, &w.u, jac, Some(coeffs))
                    }
                };
                let sample = Sample {
                    t: self.ensemble.times[j],
                    x,
                    y_hat,
                    u,
                    jac,
                    coeffs,
                    terminal,
                };
                f(m, j, &sample);
            }
        }
    }

    /// Per-snapshot sums of `width` statistics, `sums[j·width + k]`.
    pub fn accumulate(&self, width: usize, need: Need, f: impl Fn(&Sample, &mut [f64]) + Sync) -> Vec<f64> {
        let j_count = self.snapshots();
        let partials = self.blocks(|range| {
            let mut sums = vec![0.0; j_count * width];
            self.walk(range, need, |_, j, s| f(s, &mut sums[j * width..(j + 1) * width]));
            sums
        });
        let mut total = vec![0.0; j_count * width];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    pub fn series(&self, name: &str, values: Vec<Option<f64>>) -> DiagnosticSeries {
        DiagnosticSeries::new(name, self.ensemble.times.clone(), values).with_provenance(
            self.ensemble.particles,
            self.ensemble.seed,
            &self.ensemble.schedule_label,
        )
    }

    /// Column `k` of a sum table divided by `M`.
    pub fn mean_series(&self, name: &str, sums: &[f64], width: usize, k: usize) -> DiagnosticSeries {
        let m = self.particles() as f64;
        let values = (0..self.snapshots()).map(|j| Some(sums[j * width + k] / m)).collect();
        self.series(name, values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
