//! Labelability of trajectories from prediction-based responsibilities.

use serde::{Deserialize, Serialize};

use super::{Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::series::DiagnosticSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciationConfig {
    pub c_star: f64,
    /// Threshold on the gap `r₍₁₎ − r₍₂₎`.
    pub margin_star: f64,
    pub h_star: f64,
    pub tau_w: f64,
    pub tau_min: f64,
}

/// Entropy in nats of `(c, 1 − c)`.
pub fn binary_entropy(c: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(c) + term(1.0 - c)
}

impl Default for SpeciationConfig {
    fn default() -> Self {
        Self::with_confidence(0.92)
    }
}

impl SpeciationConfig {
    /// Defaults with `H⋆` tied to `c⋆`.
    pub fn with_confidence(c_star: f64) -> Self {
        Self {
            c_star,
            margin_star: 0.5,
            h_star: binary_entropy(c_star),
            tau_w: 0.05,
            tau_min: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.c_star) || !unit(self.margin_star) || !unit(self.tau_min) || !(self.h_star > 0.0) || !(self.tau_w > 0.0) {
            return Err(Error::Config(format!("invalid speciation thresholds {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Speciation {
    /// `P(ℓ̂_t = ℓ₁)`.
    pub accuracy: DiagnosticSeries,
    /// `1 − E max_k r_k`.
    pub risk: DiagnosticSeries,
    /// Reliable decision time per trajectory, 1 where none was reached. A path
    /// whose criteria already hold on the last recorded time before `τ_min`
    /// is decided at `τ_min` itself.
    pub t_rel: Vec<f64>,
    pub decided: Vec<bool>,
}

impl Speciation {
    /// Fraction of trajectories with a reliable decision by time `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        let hits = self.t_rel.iter().zip(&self.decided).filter(|(r, d)| **d && **r <= t).count();
        hits as f64 / self.t_rel.len() as f64
    }
}

/// `max_t (CDF_b(t) − CDF_a(t))⁺`: zero when `a` dominates `b`.
pub fn dominance_violation(a: &Speciation, b: &Speciation) -> f64 {
    a.t_rel
        .iter()
        .chain(&b.t_rel)
        .map(|&t| b.cdf(t) - a.cdf(t))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy)]
struct Track {
    t_rel: f64,
    decided: bool,
}

pub fn speciation(
    ensemble: &PathEnsemble,
    gm: &GaussianMixture,
    schedule: &Schedule,
    cfg: &SpeciationConfig,
) -> Result<Speciation> {
    cfg.validate()?;
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let (d, n) = (gm.dim(), gm.components());
    let j_count = ctx.snapshots();
    let argmax = |r: &[f64]| (0..r.len()).fold(0, |b, k| if r[k] > r[b] { k } else { b });

    let parts = ctx.blocks(|range| {
        let mut sums = vec![0.0; j_count * 2];
        let mut tracks = Vec::with_capacity(range.len());
        let (mut diff, mut r) = (vec![0.0; d], vec![0.0; n]);
        let mut oracle = 0;
        let mut label = usize::MAX;
        let mut changed_at = f64::NEG_INFINITY;
        let mut track = Track { t_rel: 1.0, decided: false };
        let mut prev_ok = false;
        ctx.walk(range, Need::Prediction, |_, j, s| {
            if j == 0 {
                gm.responsibilities_into(s.terminal, &mut diff, &mut r);
                oracle = argmax(&r);
                label = usize::MAX;
                changed_at = f64::NEG_INFINITY;
                track = Track { t_rel: 1.0, decided: false };
                prev_ok = false;
            }
            gm.responsibilities_into(s.y_hat, &mut diff, &mut r);
            let top = argmax(&r);
            let c = r[top];
            let second = (0..n).filter(|&k| k != top).map(|k| r[k]).fold(0.0, f64::max);
            let entropy: f64 = r.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            if top != label {
                if label != usize::MAX {
                    changed_at = ensemble.times[j - 1];
                }
                label = top;
            }
            sums[j * 2] += (top == oracle) as u8 as f64;
            sums[j * 2 + 1] += c;
            let ok = c >= cfg.c_star && c - second >= cfg.margin_star && entropy <= cfg.h_star && changed_at < s.t - cfg.tau_w;
            if !track.decided && ok && s.t >= cfg.tau_min {
                // criteria already met on the recorded time before the floor
                let t_rel = if prev_ok { cfg.tau_min } else { s.t };
                track = Track { t_rel, decided: true };
            }
            prev_ok = ok && s.t < cfg.tau_min;
            if j + 1 == j_count {
                tracks.push(track);
            }
        });
        (sums, tracks)
    });

    let mut sums = vec![0.0; j_count * 2];
    let mut t_rel = Vec::with_capacity(ensemble.particles);
    let mut decided = Vec::with_capacity(ensemble.particles);
    for (part, tracks) in parts {
        for (t, v) in sums.iter_mut().zip(part) {
            *t += v;
        }
        for tr in tracks {
            t_rel.push(tr.t_rel);
            decided.push(tr.decided);
        }
    }
    let m = ensemble.particles as f64;
    let accuracy = (0..j_count).map(|j| Some(sums[j * 2] / m)).collect();
    let risk = (0..j_count).map(|j| Some(1.0 - sums[j * 2 + 1] / m)).collect();
    Ok(Speciation {
        accuracy: ctx.series("accuracy", accuracy),
        risk: ctx.series("risk", risk),
        t_rel,
        decided,
    })
}
