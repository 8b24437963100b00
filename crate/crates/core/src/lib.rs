//! Harmonic path-integral diffusion with a time-varying stiffness schedule.
//!
//! The sampler drives `dx = u* dt + dW` from `x(0) = 0` so that `x(1)` is
//! distributed as a Gaussian-mixture target. For a quadratic potential
//! `β_t ‖x‖² / 2` the optimal drift is available in closed form, and this
//! crate evaluates it, simulates the resulting path ensembles, measures them
//! with a family of sampling-quality diagnostics and searches over schedules.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod mixture;
pub mod models;
pub mod noise;
pub mod optimizer;
pub mod schedule;
pub mod series;
pub mod transport;

pub use error::{Error, Result};
pub use schedule::{
    coeffs_const, coeffs_negative_window, coeffs_pwc, guard_negative_window, j_identity,
    GreensCoeffs, GuardVerdict, JDiagnostics, Schedule, ScheduleKind, ScheduleSpec,
};
pub use mixture::{
    EnergyCalibration, GaussianMixture, MixtureSpec, PosteriorOperator, PosteriorScratch,
    ProbePosterior,
};
pub use models::{model, MODEL_NAMES};
pub use dynamics::{simulate, simulate_mixture, PathEnsemble, SimConfig};
pub use series::DiagnosticSeries;
pub use transport::{W2Method, W2Report};
