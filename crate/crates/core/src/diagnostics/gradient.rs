//! Velocity-gradient statistics `Ω_t(x) = b⁻ ∂ŷ/∂x − a⁻ I`.

use serde::Serialize;

use super::{dot, norm, Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::Result;
use crate::linalg::symmetric_eigenvalues;
use crate::mixture::GaussianMixture;
use crate::schedule::{GreensCoeffs, Schedule};
use crate::series::DiagnosticSeries;

/// States closer to the origin than this are skipped by the radial scalars.
pub const RADIAL_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaStatistics {
    /// `E‖Ω‖²_F`.
    pub mean_sq_frobenius: DiagnosticSeries,
    /// `E‖Ω‖²₂` (largest singular value squared).
    pub mean_sq_operator: DiagnosticSeries,
    pub mean_trace: DiagnosticSeries,
    /// Extremal eigenvalues of `½(Ω + Ωᵀ)`.
    pub mean_lambda_max: DiagnosticSeries,
    pub mean_lambda_min: DiagnosticSeries,
    /// `E ω̂` and `E ω` over states with `‖x‖ ≥` [`RADIAL_FLOOR`].
    pub radial_predicted: DiagnosticSeries,
    pub radial: DiagnosticSeries,
}

/// Scalars of `Ω` at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSample {
    pub matrix: Vec<f64>,
    pub sq_frobenius: f64,
    pub sq_operator: f64,
    pub trace: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `(ω̂, ω)`, absent when `‖x‖ <` [`RADIAL_FLOOR`].
    pub radial: Option<(f64, f64)>,
}

impl OmegaSample {
    /// From the predicted-map Jacobian `jac[i·d + j] = ∂ŷ_i/∂x_j`.
    pub fn new(coeffs: &GreensCoeffs, x: &[f64], jac: &[f64]) -> Self {
        let d = x.len();
        let (a, b) = (coeffs.a_minus, coeffs.b_minus);
        let mut matrix: Vec<f64> = jac.iter().map(|v| b * v).collect();
        for i in 0..d {
            matrix[i * d + i] -= a;
        }
        let sq_frobenius = matrix.iter().map(|v| v * v).sum();
        let trace = (0..d).map(|i| matrix[i * d + i]).sum();
        let mut sym = vec![0.0; d * d];
        let mut gram = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                sym[i * d + j] = 0.5 * (matrix[i * d + j] + matrix[j * d + i]);
                gram[i * d + j] = (0..d).map(|k| matrix[k * d + i] * matrix[k * d + j]).sum();
            }
        }
        let eig = symmetric_eigenvalues(&sym, d);
        let sq_operator = symmetric_eigenvalues(&gram, d)[d - 1].max(0.0);
        let r = norm(x);
        let radial = (r >= RADIAL_FLOOR).then(|| {
            let mut jx = vec![0.0; d];
            for i in 0..d {
                jx[i] = dot(&jac[i * d..(i + 1) * d], x);
            }
            let hat = dot(x, &jx) / (r * r);
            (hat, b * hat - a)
        });
        Self {
            matrix,
            sq_frobenius,
            sq_operator,
            trace,
            lambda_min: eig[0],
            lambda_max: eig[d - 1],
            radial,
        }
    }
}

pub fn omega_statistics(ensemble: &PathEnsemble, gm: &GaussianMixture, schedule: &Schedule) -> Result<OmegaStatistics> {
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    const W: usize = 8;
    let sums = ctx.accumulate(W, Need::Jacobian, |s, acc| {
        let o = OmegaSample::new(s.coeffs.unwrap(), s.x, s.jac);
        acc[0] += o.sq_frobenius;
        acc[1] += o.sq_operator;
        acc[2] += o.trace;
        acc[3] += o.lambda_max;
        acc[4] += o.lambda_min;
        if let Some((hat, full)) = o.radial {
            acc[5] += hat;
            acc[6] += full;
            acc[7] += 1.0;
        }
    });
    let radial = |k: usize, name: &str| {
        let values = (0..ctx.snapshots())
            .map(|j| {
                let n = sums[j * W + 7];
                (n > 0.0).then(|| sums[j * W + k] / n)
            })
            .collect();
        ctx.series(name, values)
    };
    Ok(OmegaStatistics {
        mean_sq_frobenius: ctx.mean_series("omega_sq_frobenius", &sums, W, 0),
        mean_sq_operator: ctx.mean_series("omega_sq_operator", &sums, W, 1),
        mean_trace: ctx.mean_series("omega_trace", &sums, W, 2),
        mean_lambda_max: ctx.mean_series("omega_lambda_max", &sums, W, 3),
        mean_lambda_min: ctx.mean_series("omega_lambda_min", &sums, W, 4),
        radial_predicted: radial(5, "omega_hat_radial"),
        radial: radial(6, "omega_radial"),
    })
}
