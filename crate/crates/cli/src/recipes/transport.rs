use std::collections::BTreeMap;

use adapid_core::transport::{self, w2, w2_localized, w2_tail, w2_time_series};
use adapid_core::Error;
use serde_json::json;

use super::{abscissa, all_constant, load, mean, schedules, seed_mean, simulate, snapshot_grid};
use crate::config::Resolved;
use crate::output::RunWriter;
use crate::plot::{Line, LineChart};
use crate::CliResult;

const BASELINE_SEED: u64 = 2_000_000;

pub fn wasserstein_sweep(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    let log_x = all_constant(&scheds);
    let mut best_rows = Vec::new();
    let models: Vec<_> = res.models.iter().map(|m| load(m).map(|gm| (m.clone(), gm))).collect::<CliResult<_>>()?;
    for (name, gm) in &models {
        let mut chart = LineChart::new(format!("terminal W2, {name}"), "beta", "mean W2 over seeds");
        let mut model_summary = BTreeMap::new();
        for &[m, t] in &res.settings {
            let setting = format!("M={m};T={t}");
            let reference = gm.sample(m, res.reference_seed);
            let baseline: Vec<f64> = res
                .seeds
                .iter()
                .map(|&seed| {
                    let other = gm.sample(m, BASELINE_SEED + seed);
                    let r = w2(&other, &reference, gm.dim(), res.solver)?;
                    out.scalar("w2", "w2_baseline", name, "target_sample", Some(r.value), Some(seed), &setting);
                    Ok(r.value)
                })
                .collect::<CliResult<_>>()?;
            let mut means = Vec::new();
            for (k, s) in scheds.iter().enumerate() {
                let mut vals = Vec::new();
                let mut curves = Vec::new();
                for &seed in &res.seeds {
                    let stride = if res.stride < t { res.stride } else { t };
                    let ens = simulate(gm, name, s, m, t, stride, seed)?;
                    let r = w2(&ens.terminal, &reference, gm.dim(), res.solver)?;
                    out.scalar("w2", "w2_terminal", name, s.label(), Some(r.value), Some(seed), &setting);
                    vals.push(r.value);
                    if stride < t {
                        let series = w2_time_series(&ens, &reference, res.solver)?;
                        out.series("w2_time", name, &series, Some(seed), &setting);
                        let auc = transport::auc_early_exit(&series, 1.0);
                        out.scalar("w2_time", "w2_auc", name, s.label(), auc, Some(seed), &setting);
                        curves.push(series);
                    }
                }
                if let Some(avg) = seed_mean(&curves) {
                    let shape = transport::normalize_shape(&avg).ok();
                    model_summary.insert(
                        format!("{setting}/{}/auc", s.label()),
                        json!(avg.integral()),
                    );
                    if let Some(shape) = shape {
                        out.series("w2_time", name, &shape, None, &setting);
                    }
                }
                means.push((abscissa(s, k), mean(&vals), s.label().to_string()));
            }
            let best = means.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned();
            chart = chart.line(Line::new(
                setting.clone(),
                means.iter().map(|(x, v, _)| (*x, Some(*v))).collect(),
            ));
            let base = mean(&baseline);
            let mut dashed = Line::new(
                format!("target vs target, {setting}"),
                means.iter().map(|(x, _, _)| (*x, Some(base))).collect(),
            );
            dashed.dashed = true;
            chart = chart.line(dashed);
            model_summary.insert(
                setting.clone(),
                json!({
                    "mean_w2": means.iter().map(|(_, v, l)| (l.clone(), *v)).collect::<BTreeMap<_, _>>(),
                    "best": best.as_ref().map(|b| b.2.clone()),
                    "best_mean_w2": best.as_ref().map(|b| b.1),
                    "baseline_mean_w2": base,
                }),
            );
            if best_rows.len() < models.len() && Some(&[m, t]) == res.settings.first() {
                if let Some(b) = &best {
                    let sched = scheds.iter().find(|s| s.label() == b.2).cloned().expect("best schedule");
                    best_rows.push((format!("{name} / {}", b.2), gm, sched));
                }
            }
        }
        if log_x {
            chart = chart.log_x();
        }
        out.svg(&format!("w2_{name}.svg"), chart.render())?;
        out.summary(name, model_summary);
    }
    let [m, t] = res.settings[0];
    let grid = snapshot_grid(
        "best schedule per model: target, x_t and predicted y_hat",
        &best_rows,
        res.snapshot_particles.min(m),
        t,
        res.seeds[0],
    )?;
    out.svg("snapshots.svg", grid)
}

pub fn tail_w2(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let reference = gm.sample(res.particles, res.reference_seed);
        // per quantile: per schedule: values over seeds and matched counts
        let mut table: Vec<Vec<(Vec<f64>, Vec<usize>)>> = vec![vec![(Vec::new(), Vec::new()); scheds.len()]; res.quantiles.len()];
        for (k, s) in scheds.iter().enumerate() {
            for &seed in &res.seeds {
                let ens = simulate(&gm, name, s, res.particles, res.steps, res.steps, seed)?;
                for (qi, &q) in res.quantiles.iter().enumerate() {
                    match w2_tail(&ens.terminal, &reference, &gm, q, seed) {
                        Ok(r) => {
                            out.scalar("w2_tail", "w2_tail", name, s.label(), Some(r.value), Some(seed), format!("q={q};n_matched={}", r.matched));
                            table[qi][k].0.push(r.value);
                            table[qi][k].1.push(r.matched);
                        }
                        Err(Error::EmptyTail) => {
                            out.scalar("w2_tail", "w2_tail", name, s.label(), None, Some(seed), format!("q={q};n_matched=0"));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        let mut chart = LineChart::new(format!("tail-restricted W2, {name}"), "beta", "mean W2 on the tail");
        if all_constant(&scheds) {
            chart = chart.log_x();
        }
        let mut summary = BTreeMap::new();
        for (qi, &q) in res.quantiles.iter().enumerate() {
            let pts: Vec<(f64, Option<f64>)> = scheds
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let (v, _) = &table[qi][k];
                    (abscissa(s, k), (!v.is_empty()).then(|| mean(v)))
                })
                .collect();
            let matched: Vec<f64> = table[qi].iter().flat_map(|(_, n)| n.iter().map(|&c| c as f64)).collect();
            let label = if matched.is_empty() {
                format!("q={q}")
            } else {
                format!("q={q} (n~{:.0})", mean(&matched))
            };
            summary.insert(format!("q={q}"), json!(pts.iter().map(|p| p.1).collect::<Vec<_>>()));
            chart = chart.line(Line::new(label, pts));
        }
        out.svg(&format!("w2_tail_{name}.svg"), chart.render())?;
        out.summary(name, summary);
    }
    Ok(())
}

pub fn localized_w2(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    for name in &res.models {
        let gm = load(name)?;
        let d = gm.dim();
        let reference = gm.sample(res.particles, res.reference_seed);
        let mut chart = LineChart::new(format!("r-localized squared W2, {name}"), "radius r", "W2^2");
        let mut summary = BTreeMap::new();
        for s in &scheds {
            let mut full = Vec::new();
            let mut per_r: Vec<Vec<f64>> = vec![Vec::new(); res.radii.len()];
            for &seed in &res.seeds {
                let ens = simulate(&gm, name, s, res.particles, res.steps, res.steps, seed)?;
                let f = w2(&ens.terminal, &reference, d, res.solver)?;
                out.scalar("w2_localized", "w2_sq_full", name, s.label(), Some(f.squared), Some(seed), "");
                full.push(f.squared);
                for (ri, &r) in res.radii.iter().enumerate() {
                    match w2_localized(&ens.terminal, &reference, d, r, res.min_count, seed) {
                        Ok(rep) => {
                            out.scalar("w2_localized", "w2_sq_localized", name, s.label(), Some(rep.squared), Some(seed), format!("r={r};n_matched={}", rep.matched));
                            per_r[ri].push(rep.squared);
                        }
                        Err(Error::InsufficientMass { found, .. }) => {
                            out.scalar("w2_localized", "w2_sq_localized", name, s.label(), None, Some(seed), format!("r={r};n_matched={found}"));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            let curve: Vec<(f64, Option<f64>)> = res
                .radii
                .iter()
                .zip(&per_r)
                .map(|(&r, v)| (r, (v.len() == res.seeds.len()).then(|| mean(v))))
                .collect();
            let full_mean = mean(&full);
            summary.insert(
                s.label().to_string(),
                json!({"full": full_mean, "localized": curve.iter().map(|p| p.1).collect::<Vec<_>>()}),
            );
            let mut dashed = Line::new(format!("{} full", s.label()), res.radii.iter().map(|&r| (r, Some(full_mean))).collect());
            dashed.dashed = true;
            chart = chart.line(Line::new(s.label(), curve)).line(dashed);
        }
        summary.insert("radii".into(), json!(res.radii));
        out.svg(&format!("w2_localized_{name}.svg"), chart.render())?;
        out.summary(name, summary);
    }
    Ok(())
}
