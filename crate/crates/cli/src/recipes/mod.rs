//! Named experiment recipes. Each one reads a [`Resolved`] config, runs its
//! simulations with common random numbers across schedules, and hands every
//! row and figure to a single [`RunWriter`].

mod diagnostics;
mod search;
mod transport;

use std::path::PathBuf;

use adapid_core::dynamics::map_predicted;
use adapid_core::{model, simulate_mixture, DiagnosticSeries, GaussianMixture, PathEnsemble, Schedule, ScheduleKind, SimConfig};

use crate::config::{ExperimentConfig, Overrides, Resolved};
use crate::output::RunWriter;
use crate::plot::{Layer, ScatterGrid};
use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Recipe {
    WassersteinSweep,
    TailW2,
    LocalizedW2,
    CePanels,
    CostToGo,
    IsocostTwoPiece,
    NegativeWindowScan,
    OmegaStats,
    PwcOptimize,
    DriftDiffusion,
    LangevinMismatch,
    AutocorrSharpness,
    EnergyReg,
    Speciation,
}

pub const RECIPES: [Recipe; 14] = [
    Recipe::WassersteinSweep,
    Recipe::TailW2,
    Recipe::LocalizedW2,
    Recipe::CePanels,
    Recipe::CostToGo,
    Recipe::IsocostTwoPiece,
    Recipe::NegativeWindowScan,
    Recipe::OmegaStats,
    Recipe::PwcOptimize,
    Recipe::DriftDiffusion,
    Recipe::LangevinMismatch,
    Recipe::AutocorrSharpness,
    Recipe::EnergyReg,
    Recipe::Speciation,
];

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::WassersteinSweep => "wasserstein_sweep",
            Recipe::TailW2 => "tail_w2",
            Recipe::LocalizedW2 => "localized_w2",
            Recipe::CePanels => "ce_panels",
            Recipe::CostToGo => "cost_to_go",
            Recipe::IsocostTwoPiece => "isocost_two_piece",
            Recipe::NegativeWindowScan => "negative_window_scan",
            Recipe::OmegaStats => "omega_stats",
            Recipe::PwcOptimize => "pwc_optimize",
            Recipe::DriftDiffusion => "drift_diffusion",
            Recipe::LangevinMismatch => "langevin_mismatch",
            Recipe::AutocorrSharpness => "autocorr_sharpness",
            Recipe::EnergyReg => "energy_reg",
            Recipe::Speciation => "speciation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        RECIPES.iter().copied().find(|r| r.name() == name)
    }
}

impl clap::ValueEnum for Recipe {
    fn value_variants<'a>() -> &'a [Self] {
        &RECIPES
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// Runs one recipe and returns its output directory.
pub fn run_experiment(
    recipe: Recipe,
    config: &ExperimentConfig,
    config_text: Option<&str>,
    overrides: &Overrides,
) -> CliResult<PathBuf> {
    let res = Resolved::new(recipe, config, overrides)?;
    let mut out = RunWriter::create(&res.out, &res.experiment)?;
    out.write_meta(config_text, &res, overrides)?;
    match recipe {
        Recipe::WassersteinSweep => transport::wasserstein_sweep(&res, &mut out)?,
        Recipe::TailW2 => transport::tail_w2(&res, &mut out)?,
        Recipe::LocalizedW2 => transport::localized_w2(&res, &mut out)?,
        Recipe::CePanels => diagnostics::ce_panels(&res, &mut out)?,
        Recipe::CostToGo => diagnostics::cost_to_go(&res, &mut out)?,
        Recipe::OmegaStats => diagnostics::omega_stats(&res, &mut out)?,
        Recipe::DriftDiffusion => diagnostics::drift_diffusion(&res, &mut out)?,
        Recipe::LangevinMismatch => diagnostics::langevin_mismatch(&res, &mut out)?,
        Recipe::AutocorrSharpness => diagnostics::autocorr_sharpness(&res, &mut out)?,
        Recipe::Speciation => diagnostics::speciation(&res, &mut out)?,
        Recipe::IsocostTwoPiece => search::isocost_two_piece(&res, &mut out)?,
        Recipe::NegativeWindowScan => search::negative_window_scan(&res, &mut out)?,
        Recipe::PwcOptimize => search::pwc_optimize(&res, &mut out)?,
        Recipe::EnergyReg => search::energy_reg(&res, &mut out)?,
    }
    out.finish()
}

/// Explicit schedules from the config, or the constant-β grid.
pub(crate) fn schedules(res: &Resolved) -> CliResult<Vec<Schedule>> {
    match &res.schedules {
        Some(specs) => specs.iter().map(|s| Ok(s.build()?)).collect(),
        None => res.betas.iter().map(|&b| Ok(Schedule::constant(b)?)).collect(),
    }
}

/// Plot abscissa: `β` for constant schedules, the list position otherwise.
pub(crate) fn abscissa(schedule: &Schedule, index: usize) -> f64 {
    match schedule.kind() {
        ScheduleKind::Constant { beta } => *beta,
        _ => index as f64,
    }
}

pub(crate) fn all_constant(schedules: &[Schedule]) -> bool {
    schedules.iter().all(|s| matches!(s.kind(), ScheduleKind::Constant { beta } if *beta > 0.0))
}

pub(crate) fn simulate(
    gm: &GaussianMixture,
    name: &str,
    schedule: &Schedule,
    particles: usize,
    steps: usize,
    stride: usize,
    seed: u64,
) -> CliResult<PathEnsemble> {
    let config = SimConfig::new(name, schedule.clone(), particles, steps, seed).with_stride(stride.min(steps));
    Ok(simulate_mixture(gm, &config)?)
}

pub(crate) fn load(name: &str) -> CliResult<GaussianMixture> {
    Ok(model(name)?)
}

/// Pointwise mean over seeds; `None` wherever any seed is missing.
pub(crate) fn seed_mean(series: &[DiagnosticSeries]) -> Option<DiagnosticSeries> {
    let first = series.first()?;
    let n = series.len() as f64;
    let values = (0..first.len())
        .map(|j| {
            series
                .iter()
                .map(|s| s.values.get(j).copied().flatten())
                .sum::<Option<f64>>()
                .map(|v| v / n)
        })
        .collect();
    let mut out = DiagnosticSeries::new(first.name.clone(), first.times.clone(), values);
    out.schedule_label = first.schedule_label.clone();
    out.particles = first.particles;
    Some(out)
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn as_points(series: &DiagnosticSeries) -> Vec<(f64, Option<f64>)> {
    series.times.iter().copied().zip(series.values.iter().copied()).collect()
}

/// Target, current state and predicted state at five evenly spaced recorded
/// midpoints, one row per `(label, model, schedule)`.
pub(crate) fn snapshot_grid(
    title: &str,
    rows: &[(String, &GaussianMixture, Schedule)],
    particles: usize,
    steps: usize,
    seed: u64,
) -> CliResult<Option<String>> {
    let mut grid = ScatterGrid {
        title: title.into(),
        max_points: 600,
        ..Default::default()
    };
    for (label, gm, schedule) in rows {
        if gm.dim() < 2 {
            return Ok(None);
        }
        let ens = simulate(gm, label, schedule, particles, steps, 1, seed)?;
        let predicted = map_predicted(&ens, gm, schedule)?;
        let (d, snaps) = (ens.dim, ens.snapshots());
        let picks: Vec<usize> = (0..5).map(|k| (k * (snaps - 1) + 2) / 4).collect();
        if grid.col_labels.is_empty() {
            grid.col_labels = picks.iter().map(|&j| format!("t = {:.3}", ens.times[j])).collect();
        }
        let target: Vec<f64> = gm.sample(particles, seed ^ 0x7a11).chunks(d).flat_map(|p| [p[0], p[1]]).collect();
        let mut row = Vec::new();
        for &j in &picks {
            let pick = |buf: &[f64]| -> Vec<f64> {
                (0..ens.particles)
                    .flat_map(|p| {
                        let o = (p * snaps + j) * d;
                        [buf[o], buf[o + 1]]
                    })
                    .collect()
            };
            row.push(vec![
                Layer {
                    label: "target".into(),
                    points: target.clone(),
                },
                Layer {
                    label: "x_t".into(),
                    points: pick(&ens.states),
                },
                Layer {
                    label: "predicted y_hat".into(),
                    points: pick(&predicted),
                },
            ]);
        }
        grid.row_labels.push(label.clone());
        grid.panels.push(row);
    }
    Ok(grid.render())
}
