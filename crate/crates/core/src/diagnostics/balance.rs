//! Drift–diffusion balance and the mismatch against the Langevin drift.

use serde::Serialize;

use super::{dot, norm, Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::Result;
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::series::DiagnosticSeries;

pub const DEFAULT_EPS_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftDiffusion {
    /// `√(E‖u*‖² / d)`.
    pub kappa_s: DiagnosticSeries,
    /// `2 E[x · u*] / d`.
    pub kappa_ms: DiagnosticSeries,
    /// `E[x · u* / (‖x‖ ‖u*‖)]`, zero where either norm vanishes.
    pub kappa_align: DiagnosticSeries,
}

pub fn drift_diffusion(ensemble: &PathEnsemble, gm: &GaussianMixture, schedule: &Schedule) -> Result<DriftDiffusion> {
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let d = ensemble.dim as f64;
    let sums = ctx.accumulate(3, Need::Prediction, |s, acc| {
        let xu = dot(s.x, s.u);
        let nn = norm(s.x) * norm(s.u);
        acc[0] += dot(s.u, s.u);
        acc[1] += xu;
        acc[2] += if nn == 0.0 { 0.0 } else { xu / nn };
    });
    let m = ensemble.particles as f64;
    let column = |k: usize, f: &dyn Fn(f64) -> f64| -> Vec<Option<f64>> {
        (0..ctx.snapshots()).map(|j| Some(f(sums[j * 3 + k] / m))).collect()
    };
    Ok(DriftDiffusion {
        kappa_s: ctx.series("kappa_s", column(0, &|v| (v / d).sqrt())),
        kappa_ms: ctx.series("kappa_ms", column(1, &|v| 2.0 * v / d)),
        kappa_align: ctx.series("kappa_align", column(2, &|v| v)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LangevinMismatch {
    pub eps_floor: f64,
    pub rho_sym: DiagnosticSeries,
    pub cosine: DiagnosticSeries,
    pub r_mag: DiagnosticSeries,
}

/// `(ρ_sym, cos, r_mag)` for one pair of drifts.
pub fn langevin_terms(u: &[f64], b_l: &[f64], eps: f64) -> (f64, f64, f64) {
    let (nu, nb) = (norm(u), norm(b_l));
    let diff: f64 = u.iter().zip(b_l).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    (diff / (nu + nb + eps), dot(u, b_l) / (nu * nb + eps), nu / (nb + eps))
}

/// Compares `u*` with the unit-diffusion Langevin drift `½ ∇ log p`.
pub fn langevin_mismatch(
    ensemble: &PathEnsemble,
    gm: &GaussianMixture,
    schedule: &Schedule,
    eps_floor: f64,
) -> Result<LangevinMismatch> {
    if !(eps_floor > 0.0) {
        return Err(crate::Error::Config(format!("ε floor {eps_floor} must be positive")));
    }
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let sums = ctx.accumulate(3, Need::Prediction, |s, acc| {
        let b_l = gm.langevin_drift(s.x);
        let (rho, cos, ratio) = langevin_terms(s.u, &b_l, eps_floor);
        acc[0] += rho;
        acc[1] += cos;
        acc[2] += ratio;
    });
    Ok(LangevinMismatch {
        eps_floor,
        rho_sym: ctx.mean_series("rho_sym", &sums, 3, 0),
        cosine: ctx.mean_series("cosine", &sums, 3, 1),
        r_mag: ctx.mean_series("r_mag", &sums, 3, 2),
    })
}
