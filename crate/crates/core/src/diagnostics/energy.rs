//! Target energy along paths: current and predicted cross-entropies and the
//! path-energy objective.

use serde::Serialize;

use super::{correlation, Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::Result;
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::series::DiagnosticSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossEntropy {
    pub zeta: f64,
    /// `E_c = ζ · C-CE(t_J)`; `None` when `ζ = 0` (nothing is filtered).
    pub threshold: Option<f64>,
    /// Mean `E(x_t)` over retained states.
    pub current: DiagnosticSeries,
    /// Mean `E(ŷ(t; x_t))` over retained predictions.
    pub predicted: DiagnosticSeries,
    pub current_retained: Vec<usize>,
    pub predicted_retained: Vec<usize>,
}

/// Particle-mean energy `E(x_t)` at every snapshot.
pub fn energy_series(ensemble: &PathEnsemble, gm: &GaussianMixture) -> Result<DiagnosticSeries> {
    let ctx = PathContext::states_only(ensemble, gm)?;
    let sums = ctx.accumulate(1, Need::State, |s, acc| acc[0] += gm.energy(s.x));
    Ok(ctx.mean_series("energy", &sums, 1, 0))
}

/// Unconditional (`ζ = 0`) and energy-conditioned cross-entropy curves. The
/// cutoff is anchored at the terminal current mean and shared by all times
/// and by both objects.
pub fn cross_entropy_series(
    ensemble: &PathEnsemble,
    gm: &GaussianMixture,
    schedule: &Schedule,
    zeta: f64,
) -> Result<CrossEntropy> {
    if !(zeta >= 0.0) {
        return Err(crate::Error::Config(format!("ζ = {zeta} must be non-negative")));
    }
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let threshold = if zeta == 0.0 {
        None
    } else {
        let last = ensemble.snapshots() - 1;
        let terminal_mean =
            (0..ensemble.particles).map(|m| gm.energy(ensemble.state(m, last))).sum::<f64>() / ensemble.particles as f64;
        Some(zeta * terminal_mean)
    };
    let keep = |e: f64| threshold.is_none_or(|c| e >= c);
    let sums = ctx.accumulate(4, Need::Prediction, |s, acc| {
        let ex = gm.energy(s.x);
        if keep(ex) {
            acc[0] += ex;
            acc[1] += 1.0;
        }
        let ey = gm.energy(s.y_hat);
        if keep(ey) {
            acc[2] += ey;
            acc[3] += 1.0;
        }
    });
    let j_count = ctx.snapshots();
    let column = |k: usize| -> (Vec<Option<f64>>, Vec<usize>) {
        (0..j_count)
            .map(|j| {
                let (sum, n) = (sums[j * 4 + k], sums[j * 4 + k + 1]);
                ((n > 0.0).then(|| sum / n), n as usize)
            })
            .unzip()
    };
    let (current, current_retained) = column(0);
    let (predicted, predicted_retained) = column(2);
    Ok(CrossEntropy {
        zeta,
        threshold,
        current: ctx.series("c_ce", current),
        predicted: ctx.series("p_ce", predicted),
        current_retained,
        predicted_retained,
    })
}

/// `J_E`: time average of the particle-mean energy.
pub fn energy_objective(ensemble: &PathEnsemble, gm: &GaussianMixture) -> Result<f64> {
    Ok(energy_series(ensemble, gm)?.integral().expect("energies are finite"))
}

/// `J_E + λ_time (t* − t_trans)²`, with `t*` the first crossing of `a_level`
/// by the predicted auto-correlation.
pub fn energy_regularized(
    ensemble: &PathEnsemble,
    gm: &GaussianMixture,
    a_hat: &DiagnosticSeries,
    lambda_time: f64,
    t_trans: f64,
    a_level: f64,
) -> Result<f64> {
    let t_star = correlation::transition_time(a_hat, a_level);
    Ok(energy_objective(ensemble, gm)? + lambda_time * (t_star - t_trans).powi(2))
}
