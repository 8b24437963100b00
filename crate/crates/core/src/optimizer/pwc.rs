//! Hierarchical piecewise-constant refinement by coordinate descent.

use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};
use crate::schedule::Schedule;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[lo, hi]` with exactly `evals` evaluations
/// (at least 2). Returns the best point seen and every `(x, f(x))` pair in
/// evaluation order.
pub fn golden_section(lo: f64, hi: f64, evals: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64, Vec<(f64, f64)>) {
    assert!(evals >= 2 && lo <= hi);
    let mut trials = Vec::with_capacity(evals);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    trials.push((x1, f1));
    let mut f2 = f(x2);
    trials.push((x2, f2));
    for _ in 2..evals {
        // NaN and failures are treated as +∞
        if f1.total_cmp(&f2).is_le() {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            trials.push((x1, f1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            trials.push((x2, f2));
        }
    }
    let (x, v) = trials.iter().copied().min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
    (x, v, trials)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwcConfig {
    /// Each level must be a multiple of the one before.
    pub levels: Vec<usize>,
    pub bounds: (f64, f64),
    pub evals_per_coord: usize,
    pub max_sweeps: usize,
    /// Stop a level when a sweep improves the objective by less than this
    /// relative amount.
    pub rel_tol: f64,
}

impl Default for PwcConfig {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 4, 8],
            bounds: super::DEFAULT_BETA_BOUNDS,
            evals_per_coord: 20,
            max_sweeps: 6,
            rel_tol: 1e-3,
        }
    }
}

impl PwcConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!("β bounds {:?} must satisfy 0 ≤ lo < hi", self.bounds)));
        }
        if self.levels.is_empty() || self.levels[0] == 0 {
            return Err(Error::Config("refinement levels must be positive".into()));
        }
        for w in self.levels.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::Config(format!("level {} does not refine level {}", w[1], w[0])));
            }
        }
        if self.evals_per_coord < 2 || self.max_sweeps == 0 {
            return Err(Error::Config("need ≥ 2 evaluations per coordinate and ≥ 1 sweep".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub level: usize,
    pub sweep: usize,
    /// `None` for the evaluation of a level's starting schedule.
    pub coord: Option<usize>,
    pub beta: f64,
    /// `None` when the evaluation failed.
    pub objective: Option<f64>,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RefinementTrace {
    pub entries: Vec<TraceEntry>,
    /// `(level, values, objective)` at the end of every level.
    pub finals: Vec<(usize, Vec<f64>, f64)>,
}

impl RefinementTrace {
    /// Objective after each accepted move, per level.
    pub fn accepted(&self, level: usize) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.level == level && e.accepted)
            .filter_map(|e| e.objective)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct PwcResult {
    pub schedules: Vec<Schedule>,
    pub trace: RefinementTrace,
    pub best_values: Vec<f64>,
    pub best_objective: f64,
}

/// Coordinate descent over PWC values, refined level by level. Children
/// start from their parent's value, so a level starts exactly where the
/// previous one ended.
pub fn optimize_pwc(objective: &Objective, config: &PwcConfig) -> Result<PwcResult> {
    config.validate()?;
    let (lo, hi) = config.bounds;
    let eval = |values: &[f64]| -> Option<f64> {
        Schedule::pwc(values.to_vec()).and_then(|s| objective.value(&s)).ok()
    };
    let mut trace = RefinementTrace::default();
    let mut schedules = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut current = f64::INFINITY;

    for (li, &level) in config.levels.iter().enumerate() {
        if li == 0 {
            values = vec![0.5 * (lo + hi); level];
        } else {
            let factor = level / values.len();
            values = values.iter().flat_map(|&v| std::iter::repeat_n(v, factor)).collect();
        }
        let start = eval(&values);
        trace.entries.push(TraceEntry {
            level,
            sweep: 0,
            coord: None,
            beta: values[0],
            objective: start,
            accepted: start.is_some(),
        });
        current = start.unwrap_or(f64::INFINITY);

        // a single coordinate gains nothing from a repeated sweep
        let sweeps = if level == 1 { 1 } else { config.max_sweeps };
        for sweep in 1..=sweeps {
            let before = current;
            for c in 0..level {
                let mut probe = values.clone();
                let (_, _, trials) = golden_section(lo, hi, config.evals_per_coord, |b| {
                    probe[c] = b;
                    eval(&probe).unwrap_or(f64::INFINITY)
                });
                let best = trials.iter().enumerate().min_by(|p, q| p.1 .1.total_cmp(&q.1 .1)).map(|(k, _)| k);
                let take = best.filter(|&k| trials[k].1 < current);
                for (k, &(beta, v)) in trials.iter().enumerate() {
                    trace.entries.push(TraceEntry {
                        level,
                        sweep,
                        coord: Some(c),
                        beta,
                        objective: v.is_finite().then_some(v),
                        accepted: take == Some(k),
                    });
                }
                if let Some(k) = take {
                    values[c] = trials[k].0;
                    current = trials[k].1;
                }
            }
            if before.is_finite() && before - current <= config.rel_tol * before.abs() {
                break;
            }
        }
        if !current.is_finite() {
            return Err(Error::Degenerate(format!("no finite objective at level {level}")));
        }
        trace.finals.push((level, values.clone(), current));
        schedules.push(Schedule::pwc(values.clone())?);
    }

    Ok(PwcResult {
        schedules,
        trace,
        best_values: values,
        best_objective: current,
    })
}
