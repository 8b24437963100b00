//! Dynamic cost-to-go split into potential and kinetic parts.

use serde::Serialize;

use super::{dot, Need, PathContext};
use crate::dynamics::PathEnsemble;
use crate::error::Result;
use crate::mixture::GaussianMixture;
use crate::schedule::Schedule;
use crate::series::DiagnosticSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostBreakdown {
    /// Instantaneous `E[½ β_t ‖x_t‖²]`.
    pub potential_rate: DiagnosticSeries,
    /// Instantaneous `E[½ ‖u*‖²]`.
    pub kinetic_rate: DiagnosticSeries,
    /// Running integrals from 0 to each snapshot.
    pub potential: DiagnosticSeries,
    pub kinetic: DiagnosticSeries,
    pub total: DiagnosticSeries,
    /// `𝒞^kin / 𝒞`, missing where `𝒞 = 0`.
    pub kinetic_share: DiagnosticSeries,
    pub potential_share: DiagnosticSeries,
    /// Integrals over the whole of `[0, 1]`.
    pub terminal_potential: f64,
    pub terminal_kinetic: f64,
    pub terminal_total: f64,
}

pub fn cost_to_go(ensemble: &PathEnsemble, gm: &GaussianMixture, schedule: &Schedule) -> Result<CostBreakdown> {
    let ctx = PathContext::new(ensemble, gm, schedule)?;
    let sums = ctx.accumulate(2, Need::Prediction, |s, acc| {
        acc[0] += 0.5 * schedule.beta_at(s.t) * dot(s.x, s.x);
        acc[1] += 0.5 * dot(s.u, s.u);
    });
    let potential_rate = ctx.mean_series("potential_rate", &sums, 2, 0);
    let kinetic_rate = ctx.mean_series("kinetic_rate", &sums, 2, 1);
    let potential = potential_rate.cumulative("potential");
    let kinetic = kinetic_rate.cumulative("kinetic");
    let total_values: Vec<Option<f64>> = potential
        .values
        .iter()
        .zip(&kinetic.values)
        .map(|(p, k)| Some(p.unwrap() + k.unwrap()))
        .collect();
    let share = |part: &DiagnosticSeries| -> Vec<Option<f64>> {
        part.values
            .iter()
            .zip(&total_values)
            .map(|(v, c)| {
                let c = c.unwrap();
                (c != 0.0).then(|| v.unwrap() / c)
            })
            .collect()
    };
    let kinetic_share = ctx.series("kinetic_share", share(&kinetic));
    let potential_share = ctx.series("potential_share", share(&potential));
    let terminal_potential = potential_rate.integral().unwrap();
    let terminal_kinetic = kinetic_rate.integral().unwrap();
    Ok(CostBreakdown {
        total: ctx.series("total", total_values),
        potential_rate,
        kinetic_rate,
        potential,
        kinetic,
        kinetic_share,
        potential_share,
        terminal_potential,
        terminal_kinetic,
        terminal_total: terminal_potential + terminal_kinetic,
    })
}
