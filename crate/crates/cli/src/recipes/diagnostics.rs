use std::collections::BTreeMap;

use adapid_core::diagnostics as diag;
use adapid_core::{DiagnosticSeries, GaussianMixture, PathEnsemble, Schedule};
use serde_json::json;

use super::{abscissa, all_constant, as_points, load, mean, schedules, seed_mean, simulate};
use crate::config::Resolved;
use crate::output::RunWriter;
use crate::plot::{Line, LineChart};
use crate::CliResult;

/// A series and the `extra` tag it is written with.
type Tagged = (DiagnosticSeries, String);

/// Simulates every `(schedule, seed)`, writes the series returned by `f`, and
/// returns their seed means, indexed `[schedule][item]`.
fn sweep<F>(res: &Resolved, out: &mut RunWriter, table: &str, gm: &GaussianMixture, name: &str, scheds: &[Schedule], mut f: F) -> CliResult<Vec<Vec<Tagged>>>
where
    F: FnMut(&PathEnsemble, &Schedule, u64, &mut RunWriter) -> CliResult<Vec<Tagged>>,
{
    let mut means = Vec::new();
    for s in scheds {
        let mut per_seed: Vec<Vec<Tagged>> = Vec::new();
        for &seed in &res.seeds {
            let ens = simulate(gm, name, s, res.particles, res.steps, res.stride, seed)?;
            let items = f(&ens, s, seed, out)?;
            for (series, extra) in &items {
                out.series(table, name, series, Some(seed), extra);
            }
            per_seed.push(items);
        }
        let n_items = per_seed.first().map_or(0, |v| v.len());
        let avg = (0..n_items)
            .filter_map(|i| {
                let group: Vec<DiagnosticSeries> = per_seed.iter().map(|items| items[i].0.clone()).collect();
                seed_mean(&group).map(|m| (m, per_seed[0][i].1.clone()))
            })
            .collect();
        means.push(avg);
    }
    Ok(means)
}

fn file_tag(extra: &str) -> String {
    extra.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '.').collect()
}

/// One chart per item, one line per schedule.
fn charts(out: &mut RunWriter, model: &str, scheds: &[Schedule], means: &[Vec<Tagged>]) -> CliResult<()> {
    let Some(first) = means.first() else {
        return Ok(());
    };
    for (i, (series, extra)) in first.iter().enumerate() {
        let title = if extra.is_empty() {
            format!("{}, {model}", series.name)
        } else {
            format!("{} ({extra}), {model}", series.name)
        };
        let mut chart = LineChart::new(title, "t", series.name.clone());
        for (s, items) in scheds.iter().zip(means) {
            chart = chart.line(Line::new(s.label(), as_points(&items[i].0)));
        }
        let tag = if extra.is_empty() { String::new() } else { format!("_{}", file_tag(extra)) };
        out.svg(&format!("{}{tag}_{model}.svg", series.name), chart.render())?;
    }
    Ok(())
}

/// Scalar-per-schedule chart over the grid.
fn grid_chart(title: String, y_label: &str, scheds: &[Schedule], lines: Vec<(&str, Vec<Option<f64>>)>) -> Option<String> {
    let mut chart = LineChart::new(title, if all_constant(scheds) { "beta" } else { "schedule index" }, y_label);
    if all_constant(scheds) {
        chart = chart.log_x();
    }
    for (label, values) in lines {
        let pts = scheds.iter().enumerate().map(|(k, s)| (abscissa(s, k), values[k])).collect();
        chart = chart.line(Line::new(label, pts));
    }
    chart.render()
}

fn counts(name: &str, ens: &PathEnsemble, counts: &[usize]) -> DiagnosticSeries {
    DiagnosticSeries::new(name, ens.times.clone(), counts.iter().map(|&c| Some(c as f64)).collect()).with_provenance(
        ens.particles,
        ens.seed,
        &ens.schedule_label,
    )
}

pub fn ce_panels(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let means = sweep(res, out, "cross_entropy", &gm, name, &scheds, |ens, s, seed, out| {
            let mut items = Vec::new();
            for &zeta in &res.zetas {
                let ce = diag::cross_entropy_series(ens, &gm, s, zeta)?;
                let tag = format!("zeta={zeta}");
                out.scalar("cross_entropy_threshold", "energy_cutoff", name, s.label(), ce.threshold, Some(seed), tag.clone());
                items.push((ce.current, tag.clone()));
                items.push((ce.predicted, tag.clone()));
                items.push((counts("c_ce_retained", ens, &ce.current_retained), tag.clone()));
                items.push((counts("p_ce_retained", ens, &ce.predicted_retained), tag));
            }
            Ok(items)
        })?;
        charts(out, name, &scheds, &means)?;
    }
    Ok(())
}

pub fn cost_to_go(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let mut terminal: Vec<[Vec<f64>; 3]> = vec![Default::default(); scheds.len()];
        let means = sweep(res, out, "cost_to_go", &gm, name, &scheds, |ens, s, seed, out| {
            let c = diag::cost_to_go(ens, &gm, s)?;
            let idx = scheds.iter().position(|x| x.label() == s.label()).unwrap_or(0);
            for (metric, v, slot) in [
                ("terminal_kinetic", c.terminal_kinetic, 0),
                ("terminal_potential", c.terminal_potential, 1),
                ("terminal_total", c.terminal_total, 2),
            ] {
                out.scalar("cost_terminal", metric, name, s.label(), Some(v), Some(seed), "");
                terminal[idx][slot].push(v);
            }
            Ok(vec![
                (c.kinetic, String::new()),
                (c.potential, String::new()),
                (c.total, String::new()),
                (c.kinetic_share, String::new()),
                (c.potential_share, String::new()),
                (c.kinetic_rate, String::new()),
                (c.potential_rate, String::new()),
            ])
        })?;
        charts(out, name, &scheds, &means)?;
        let m = |slot: usize| terminal.iter().map(|v| Some(mean(&v[slot]))).collect::<Vec<_>>();
        let (kin, pot, tot) = (m(0), m(1), m(2));
        let increasing = kin.windows(2).all(|w| w[1] > w[0]);
        out.svg(
            &format!("cost_terminal_{name}.svg"),
            grid_chart(format!("terminal cost-to-go, {name}"), "seed-mean cost", &scheds, vec![("kinetic", kin.clone()), ("potential", pot.clone()), ("total", tot.clone())]),
        )?;
        let labels: Vec<&str> = scheds.iter().map(|s| s.label()).collect();
        out.summary(
            name,
            json!({"schedules": labels, "terminal_kinetic": kin, "terminal_potential": pot, "terminal_total": tot, "kinetic_strictly_increasing": increasing}),
        );
    }
    Ok(())
}

pub fn omega_stats(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let means = sweep(res, out, "omega", &gm, name, &scheds, |ens, s, _, _| {
            let o = diag::omega_statistics(ens, &gm, s)?;
            Ok([o.mean_sq_operator, o.mean_sq_frobenius, o.mean_trace, o.mean_lambda_max, o.mean_lambda_min, o.radial_predicted, o.radial]
                .into_iter()
                .map(|x| (x, String::new()))
                .collect())
        })?;
        charts(out, name, &scheds, &means)?;
        let time_mean = |i: usize| means.iter().map(|items| items[i].0.time_mean()).collect::<Vec<_>>();
        let (op, fro) = (time_mean(0), time_mean(1));
        for (s, v) in scheds.iter().zip(&op) {
            out.scalar("omega_time_mean", "omega_sq_operator_time_mean", name, s.label(), *v, None, "");
        }
        let best = op
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| scheds[k].label().to_string());
        out.svg(
            &format!("omega_time_mean_{name}.svg"),
            grid_chart(format!("time-mean E||Omega||^2, {name}"), "time mean", &scheds, vec![("operator norm", op.clone()), ("Frobenius", fro.clone())]),
        )?;
        out.summary(name, json!({"operator_time_mean": op, "frobenius_time_mean": fro, "argmin": best}));
    }
    Ok(())
}

pub fn drift_diffusion(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let means = sweep(res, out, "drift_diffusion", &gm, name, &scheds, |ens, s, _, _| {
            let k = diag::drift_diffusion(ens, &gm, s)?;
            Ok(vec![(k.kappa_s, String::new()), (k.kappa_ms, String::new()), (k.kappa_align, String::new())])
        })?;
        charts(out, name, &scheds, &means)?;
    }
    Ok(())
}

pub fn langevin_mismatch(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let means = sweep(res, out, "langevin", &gm, name, &scheds, |ens, s, _, _| {
            let l = diag::langevin_mismatch(ens, &gm, s, res.eps_floor)?;
            Ok(vec![(l.rho_sym, String::new()), (l.cosine, String::new()), (l.r_mag, String::new())])
        })?;
        charts(out, name, &scheds, &means)?;
    }
    Ok(())
}

pub fn autocorr_sharpness(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let mut scalars: BTreeMap<String, [Vec<f64>; 3]> = BTreeMap::new();
        let means = sweep(res, out, "autocorrelation", &gm, name, &scheds, |ens, s, seed, out| {
            let ac = diag::autocorrelations(ens, &gm, s)?;
            let sharp = diag::sharpness(&ac.a_hat);
            let reg = diag::sharpness_regularized(&ac.a_hat, res.lambda_trans, res.t_trans);
            let t_star = diag::transition_time(&ac.a_hat, res.a_level);
            let tag = format!("lambda_trans={};t_trans={}", res.lambda_trans, res.t_trans);
            out.scalar("sharpness", "sharpness", name, s.label(), sharp, Some(seed), "");
            out.scalar("sharpness", "sharpness_reg", name, s.label(), reg, Some(seed), tag);
            out.scalar("sharpness", "t_star", name, s.label(), Some(t_star), Some(seed), format!("level={}", res.a_level));
            let entry = scalars.entry(s.label().to_string()).or_default();
            entry[0].push(sharp.unwrap_or(f64::NAN));
            entry[1].push(reg.unwrap_or(f64::NAN));
            entry[2].push(t_star);
            Ok(vec![(ac.a, String::new()), (ac.a_hat, String::new())])
        })?;
        charts(out, name, &scheds, &means)?;
        let col = |i: usize| -> Vec<Option<f64>> {
            scheds
                .iter()
                .map(|s| scalars.get(s.label()).map(|v| mean(&v[i])).filter(|v| v.is_finite()))
                .collect()
        };
        let (sharp, reg, t_star) = (col(0), col(1), col(2));
        let arg = |v: &[Option<f64>]| {
            v.iter()
                .enumerate()
                .filter_map(|(k, x)| x.map(|x| (k, x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(k, _)| scheds[k].label().to_string())
        };
        out.svg(
            &format!("sharpness_{name}.svg"),
            grid_chart(format!("sharpness, {name}"), "seed mean", &scheds, vec![("S_hat", sharp.clone()), ("S_hat regularized", reg.clone())]),
        )?;
        out.summary(
            name,
            json!({"sharpness": sharp, "sharpness_reg": reg, "t_star": t_star, "argmin_sharpness": arg(&sharp), "argmin_sharpness_reg": arg(&reg)}),
        );
    }
    Ok(())
}

pub fn speciation(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    let cfg = &res.speciation;
    for name in &res.models {
        let gm = load(name)?;
        let mut results: Vec<(u64, String, diag::Speciation)> = Vec::new();
        let means = sweep(res, out, "speciation", &gm, name, &scheds, |ens, s, seed, out| {
            let sp = diag::speciation(ens, &gm, s, cfg)?;
            let cdf = DiagnosticSeries::new("decision_cdf", ens.times.clone(), ens.times.iter().map(|&t| Some(sp.cdf(t))).collect())
                .with_provenance(ens.particles, ens.seed, &ens.schedule_label);
            let decided = sp.decided.iter().filter(|d| **d).count() as f64 / sp.decided.len() as f64;
            out.scalar("speciation_scalars", "cdf_at_tau_min", name, s.label(), Some(sp.cdf(cfg.tau_min)), Some(seed), format!("tau_min={}", cfg.tau_min));
            out.scalar("speciation_scalars", "cdf_at_one", name, s.label(), Some(sp.cdf(1.0)), Some(seed), "");
            out.scalar("speciation_scalars", "decided_fraction", name, s.label(), Some(decided), Some(seed), "");
            let items = vec![(sp.accuracy.clone(), String::new()), (sp.risk.clone(), String::new()), (cdf, String::new())];
            results.push((seed, s.label().to_string(), sp));
            Ok(items)
        })?;
        charts(out, name, &scheds, &means)?;
        let mut worst = 0.0f64;
        for &seed in &res.seeds {
            let runs: Vec<&(u64, String, diag::Speciation)> = results.iter().filter(|r| r.0 == seed).collect();
            for i in 0..runs.len() {
                for j in i + 1..runs.len() {
                    let v = diag::dominance_violation(&runs[i].2, &runs[j].2);
                    worst = worst.max(v);
                    let pair = format!("{} over {}", runs[i].1, runs[j].1);
                    out.scalar("speciation_scalars", "dominance_violation", name, &pair, Some(v), Some(seed), "");
                }
            }
        }
        let per = |f: &dyn Fn(&diag::Speciation) -> f64| -> BTreeMap<String, f64> {
            scheds
                .iter()
                .map(|s| {
                    let v: Vec<f64> = results.iter().filter(|r| r.1 == s.label()).map(|r| f(&r.2)).collect();
                    (s.label().to_string(), mean(&v))
                })
                .collect()
        };
        out.summary(
            name,
            json!({
                "cdf_at_tau_min": per(&|sp| sp.cdf(cfg.tau_min)),
                "cdf_at_one": per(&|sp| sp.cdf(1.0)),
                "final_accuracy": per(&|sp| sp.accuracy.last().unwrap_or(f64::NAN)),
                "max_dominance_violation_in_grid_order": worst,
                "config": cfg,
            }),
        );
    }
    Ok(())
}
