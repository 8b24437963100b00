//! Auto-correlations with the terminal state and the sharpness functional.

use serde::Serialize;

use super::{dot, Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::series::DiagnosticSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Autocorrelations {
    /// `Σ x_t·x₁ / Σ ‖x₁‖²`.
    pub a: DiagnosticSeries,
    /// `Σ ŷ(t; x_t)·x₁ / Σ ‖x₁‖²`.
    pub a_hat: DiagnosticSeries,
}

pub fn autocorrelations(ensemble: &PathEnsemble, gm: &GaussianMixture, schedule: &Schedule) -> Result<Autocorrelations> {
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let denom: f64 = (0..ensemble.particles)
        .map(|m| {
            let x1 = ensemble.terminal_state(m);
            dot(x1, x1)
        })
        .sum();
    if denom == 0.0 {
        return Err(Error::Degenerate("all terminal states are zero".into()));
    }
    let sums = ctx.accumulate(2, Need::Prediction, |s, acc| {
        acc[0] += dot(s.x, s.terminal);
        acc[1] += dot(s.y_hat, s.terminal);
    });
    let column = |k: usize| (0..ctx.snapshots()).map(|j| Some(sums[j * 2 + k] / denom)).collect();
    Ok(Autocorrelations {
        a: ctx.series("A", column(0)),
        a_hat: ctx.series("A_hat", column(1)),
    })
}

/// `∫₀¹ (1 − |2Â − 1|) dt`; missing when any value is.
pub fn sharpness(a_hat: &DiagnosticSeries) -> Option<f64> {
    let mut deficit = a_hat.clone();
    deficit.values = a_hat.values.iter().map(|v| v.map(|a| 1.0 - (2.0 * a - 1.0).abs())).collect();
    deficit.integral()
}

/// First upward crossing of `level`, linearly interpolated between samples.
/// Returns the first time when the series starts at or above `level` and 1
/// when it never gets there.
pub fn transition_time(series: &DiagnosticSeries, level: f64) -> f64 {
    let ts = &series.times;
    let mut prev: Option<(f64, f64)> = None;
    for (k, v) in series.values.iter().enumerate() {
        let Some(v) = *v else {
            prev = None;
            continue;
        };
        if v >= level {
            return match prev {
                Some((t0, v0)) => t0 + (level - v0) / (v - v0) * (ts[k] - t0),
                None if k == 0 => ts[0],
                None => ts[k],
            };
        }
        prev = Some((ts[k], v));
    }
    1.0
}

/// `Ŝ + λ (t* − t_trans)²` with `t*` the first crossing of ½.
pub fn sharpness_regularized(a_hat: &DiagnosticSeries, lambda_trans: f64, t_trans: f64) -> Option<f64> {
    let s = sharpness(a_hat)?;
    if lambda_trans == 0.0 {
        return Some(s);
    }
    let t_star = transition_time(a_hat, 0.5);
    Some(s + lambda_trans * (t_star - t_trans).powi(2))
}
