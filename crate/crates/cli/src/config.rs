//! Experiment configuration: a TOML file, command-line overrides, and the
//! per-recipe default table that fills every unset field.

use std::path::{Path, PathBuf};

use adapid_core::diagnostics::{binary_entropy, SpeciationConfig};
use adapid_core::optimizer::{Budget, ObjectiveKind, PwcConfig, DEFAULT_BETA_BOUNDS, SPECIATION_GRID, W2_GRID};
use adapid_core::transport::Solver;
use adapid_core::{ScheduleSpec, MODEL_NAMES};
use serde::{Deserialize, Serialize};

use crate::recipes::Recipe;
use crate::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub model: Option<String>,
    pub models: Option<Vec<String>>,
    pub betas: Option<Vec<f64>>,
    /// Explicit schedules; replace the constant-β grid where a recipe accepts them.
    pub schedules: Option<Vec<ScheduleSpec>>,
    pub particles: Option<usize>,
    pub steps: Option<usize>,
    pub stride: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    /// `(M, T)` pairs for `wasserstein_sweep`.
    pub settings: Option<Vec<[usize; 2]>>,
    pub reference_seed: Option<u64>,
    pub solver: Option<String>,
    pub epsilon: Option<f64>,
    pub quantiles: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub min_count: Option<usize>,
    pub zetas: Option<Vec<f64>>,
    pub eps_floor: Option<f64>,
    pub lambda_trans: Option<f64>,
    pub lambda_time: Option<f64>,
    pub t_trans: Option<f64>,
    pub a_level: Option<f64>,
    pub snapshot_particles: Option<usize>,
    #[serde(default)]
    pub speciation: SpeciationSection,
    #[serde(default)]
    pub pwc: PwcSection,
    #[serde(default)]
    pub isocost: IsocostSection,
    #[serde(default)]
    pub window: WindowSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciationSection {
    pub c_star: Option<f64>,
    pub margin_star: Option<f64>,
    pub h_star: Option<f64>,
    pub tau_w: Option<f64>,
    pub tau_min: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwcSection {
    pub objective: Option<String>,
    pub levels: Option<Vec<usize>>,
    pub bounds: Option<[f64; 2]>,
    pub evals_per_coord: Option<usize>,
    pub max_sweeps: Option<usize>,
    pub rel_tol: Option<f64>,
    pub optimize: Option<bool>,
    pub report_particles: Option<usize>,
    pub report_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsocostSection {
    pub reference_beta: Option<f64>,
    pub beta1: Option<Vec<f64>>,
    pub beta2: Option<Vec<f64>>,
    pub refinements: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub magnitudes: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }
}

/// Command-line flags that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub model: Option<String>,
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub particles: Option<usize>,
    pub steps: Option<usize>,
}

/// Every parameter a recipe reads, with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub recipe: String,
    pub experiment: String,
    pub models: Vec<String>,
    pub betas: Vec<f64>,
    pub schedules: Option<Vec<ScheduleSpec>>,
    pub particles: usize,
    pub steps: usize,
    pub stride: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub settings: Vec<[usize; 2]>,
    pub reference_seed: u64,
    pub solver: Solver,
    pub quantiles: Vec<f64>,
    pub radii: Vec<f64>,
    pub min_count: usize,
    pub zetas: Vec<f64>,
    pub eps_floor: f64,
    pub lambda_trans: f64,
    pub lambda_time: f64,
    pub t_trans: f64,
    pub a_level: f64,
    pub snapshot_particles: usize,
    pub speciation: SpeciationConfig,
    pub objective: ObjectiveKind,
    pub pwc: PwcConfig,
    pub optimize: bool,
    pub report_particles: usize,
    pub report_steps: usize,
    pub reference_beta: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub refinements: usize,
    pub magnitudes: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Constant-β grid used by the sharpness recipes; extends past the
/// default bounds to expose the large-β degeneracy.
pub const SHARPNESS_GRID: [f64; 10] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0];
pub const OMEGA_GRID: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
pub const ISOCOST_AXIS: [f64; 9] = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];
pub const WINDOW_MAGNITUDES: [f64; 7] = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0];
pub const WINDOW_DELTAS: [f64; 9] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45];

/// `(M, T, stride, seed count, β grid)` per recipe.
fn recipe_defaults(recipe: Recipe) -> (usize, usize, usize, u64, Vec<f64>) {
    use Recipe::*;
    match recipe {
        WassersteinSweep | TailW2 => (5000, 500, 500, 10, W2_GRID.to_vec()),
        LocalizedW2 => (20000, 2000, 2000, 1, W2_GRID.to_vec()),
        CePanels | DriftDiffusion | LangevinMismatch => (5000, 500, 5, 1, W2_GRID.to_vec()),
        CostToGo => (5000, 500, 5, 10, W2_GRID.to_vec()),
        IsocostTwoPiece | NegativeWindowScan | PwcOptimize => (2000, 300, 1, 1, vec![2.0]),
        OmegaStats => (2000, 300, 1, 1, OMEGA_GRID.to_vec()),
        AutocorrSharpness => (2000, 300, 1, 1, SHARPNESS_GRID.to_vec()),
        EnergyReg => (2000, 300, 1, 1, OMEGA_GRID.to_vec()),
        Speciation => (5000, 500, 1, 1, SPECIATION_GRID.to_vec()),
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl Resolved {
    pub fn new(recipe: Recipe, cfg: &ExperimentConfig, ov: &Overrides) -> CliResult<Self> {
        let (m, t, stride, nseeds, betas) = recipe_defaults(recipe);
        let models = match (&ov.model, &cfg.model, &cfg.models) {
            (Some(m), _, _) | (None, Some(m), _) => vec![m.clone()],
            (None, None, Some(list)) => list.clone(),
            _ => MODEL_NAMES.iter().map(|s| s.to_string()).collect(),
        };
        for name in &models {
            adapid_core::model(name)?;
        }
        let particles = ov.particles.or(cfg.particles).unwrap_or(m);
        let steps = ov.steps.or(cfg.steps).unwrap_or(t);
        let stride = cfg.stride.unwrap_or(stride).min(steps);
        let seeds = ov
            .seeds
            .clone()
            .or_else(|| cfg.seeds.clone())
            .unwrap_or_else(|| (0..nseeds).collect());
        let betas = cfg.betas.clone().unwrap_or(betas);
        check(particles > 0 && steps > 0 && stride > 0, || "M, T and stride must be positive".into())?;
        check(!seeds.is_empty(), || "seed list is empty".into())?;
        check(!betas.is_empty(), || "β grid is empty".into())?;
        check(betas.iter().all(|b| b.is_finite() && *b >= 0.0), || "β grid values must be finite and ≥ 0".into())?;
        if let Some(specs) = &cfg.schedules {
            for s in specs {
                s.build()?;
            }
        }

        let solver = match (cfg.solver.as_deref().unwrap_or("exact"), cfg.epsilon) {
            ("exact", _) => Solver::Exact,
            ("auto", _) => Solver::Auto,
            ("sinkhorn", eps) => Solver::Sinkhorn { epsilon: eps },
            (other, _) => return Err(CliError::Config(format!("unknown solver `{other}` (exact, auto, sinkhorn)"))),
        };

        let sp = &cfg.speciation;
        let mut speciation = SpeciationConfig::with_confidence(sp.c_star.unwrap_or(0.92));
        speciation.margin_star = sp.margin_star.unwrap_or(speciation.margin_star);
        speciation.h_star = sp.h_star.unwrap_or_else(|| binary_entropy(speciation.c_star));
        speciation.tau_w = sp.tau_w.unwrap_or(speciation.tau_w);
        speciation.tau_min = sp.tau_min.unwrap_or(speciation.tau_min);
        speciation.validate()?;

        let lambda_trans = cfg.lambda_trans.unwrap_or(10.0);
        let lambda_time = cfg.lambda_time.unwrap_or(10.0);
        let t_trans = cfg.t_trans.unwrap_or(0.5);
        let a_level = cfg.a_level.unwrap_or(0.5);
        let reference_seed = cfg.reference_seed.unwrap_or(1_000_003);

        let default_objective = if recipe == Recipe::EnergyReg { "energy_reg" } else { "mean_omega_sq" };
        let objective = match cfg.pwc.objective.as_deref().unwrap_or(default_objective) {
            "mean_omega_sq" => ObjectiveKind::MeanOmegaSq,
            "sharpness_reg" => ObjectiveKind::SharpnessReg { lambda_trans, t_trans },
            "energy_reg" => ObjectiveKind::EnergyReg {
                lambda_time,
                t_trans,
                a_level,
            },
            "kinetic_cost" => ObjectiveKind::KineticCost,
            "total_cost" => ObjectiveKind::TotalCost,
            "terminal_w2" => ObjectiveKind::TerminalW2 {
                reference_size: particles,
                reference_seed,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown objective `{other}` (mean_omega_sq, sharpness_reg, energy_reg, kinetic_cost, total_cost, terminal_w2)"
                )))
            }
        };
        let defaults = PwcConfig::default();
        let bounds = cfg.pwc.bounds.map(|[a, b]| (a, b)).unwrap_or(DEFAULT_BETA_BOUNDS);
        let pwc = PwcConfig {
            levels: cfg.pwc.levels.clone().unwrap_or(defaults.levels),
            bounds,
            evals_per_coord: cfg.pwc.evals_per_coord.unwrap_or(defaults.evals_per_coord),
            max_sweeps: cfg.pwc.max_sweeps.unwrap_or(defaults.max_sweeps),
            rel_tol: cfg.pwc.rel_tol.unwrap_or(defaults.rel_tol),
        };
        pwc.validate()?;

        let quantiles = cfg.quantiles.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.5, 1.0]);
        check(quantiles.iter().all(|q| *q > 0.0 && *q <= 1.0), || "quantiles must lie in (0, 1]".into())?;
        let radii = cfg.radii.clone().unwrap_or_else(|| vec![1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0]);
        check(radii.iter().all(|r| *r > 0.0), || "radii must be positive".into())?;
        let zetas = cfg.zetas.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
        check(zetas.iter().all(|z| *z >= 0.0), || "ζ values must be non-negative".into())?;
        let eps_floor = cfg.eps_floor.unwrap_or(adapid_core::diagnostics::DEFAULT_EPS_FLOOR);
        check(eps_floor > 0.0, || "eps_floor must be positive".into())?;

        let beta1 = cfg.isocost.beta1.clone().unwrap_or_else(|| ISOCOST_AXIS.to_vec());
        let beta2 = cfg.isocost.beta2.clone().unwrap_or_else(|| beta1.clone());
        check(beta1.len() >= 2 && beta2.len() >= 2, || "isocost axes need at least two values".into())?;

        let settings = cfg.settings.clone().unwrap_or_else(|| vec![[particles, steps]]);
        check(settings.iter().all(|[m, t]| *m > 0 && *t > 0), || "(M, T) settings must be positive".into())?;

        let name = recipe.name().to_string();
        Ok(Self {
            experiment: cfg.experiment.clone().unwrap_or_else(|| name.clone()),
            out: ov
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&name)),
            recipe: name,
            models,
            betas,
            schedules: cfg.schedules.clone(),
            particles,
            steps,
            stride,
            seeds,
            settings,
            reference_seed,
            solver,
            quantiles,
            radii,
            min_count: cfg.min_count.unwrap_or(adapid_core::transport::LOCALIZED_MIN_COUNT),
            zetas,
            eps_floor,
            lambda_trans,
            lambda_time,
            t_trans,
            a_level,
            snapshot_particles: cfg.snapshot_particles.unwrap_or(1000),
            speciation,
            objective,
            pwc,
            optimize: cfg.pwc.optimize.unwrap_or(true),
            report_particles: cfg.pwc.report_particles.unwrap_or(5000),
            report_steps: cfg.pwc.report_steps.unwrap_or(500),
            reference_beta: cfg.isocost.reference_beta.unwrap_or(2.0),
            beta1,
            beta2,
            refinements: cfg.isocost.refinements.unwrap_or(1),
            magnitudes: cfg.window.magnitudes.clone().unwrap_or_else(|| WINDOW_MAGNITUDES.to_vec()),
            deltas: cfg.window.deltas.clone().unwrap_or_else(|| WINDOW_DELTAS.to_vec()),
        })
    }

    pub fn budget(&self) -> Budget {
        let mut b = Budget::new(self.particles, self.steps, self.seeds.clone());
        b.stride = self.stride;
        b
    }
}
