use std::collections::BTreeMap;

use adapid_core::diagnostics::{autocorrelations, energy_objective, energy_regularized, energy_series, transition_time};
use adapid_core::optimizer::{
    self, iso_cost_level, optimize_pwc, two_piece_scan, Budget, Objective, ObjectiveKind, PwcResult,
};
use adapid_core::{guard_negative_window, GaussianMixture, GuardVerdict, Schedule};
use serde_json::json;

use super::{abscissa, all_constant, as_points, load, mean, schedules, simulate, snapshot_grid};
use crate::config::Resolved;
use crate::output::RunWriter;
use crate::plot::{Heatmap, Line, LineChart};
use crate::CliResult;

pub fn isocost_two_piece(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    for name in &res.models {
        let gm = load(name)?;
        let objective = Objective::new(ObjectiveKind::KineticCost, gm.clone(), res.budget())?;
        let scan = two_piece_scan(&objective, &res.beta1, &res.beta2, res.refinements)?;
        let iso = iso_cost_level(&scan, &objective, res.reference_beta)?;
        if let Some(w) = &iso.warning {
            out.warn(format!("{name}: {w}"));
        }
        let (n1, n2) = (scan.beta1.len(), scan.beta2.len());
        for i in 0..n1 {
            for j in 0..n2 {
                let (b1, b2) = (scan.beta1[i], scan.beta2[j]);
                out.scalar("isocost_scan", "kinetic_cost", name, &format!("pwc2-[{b1},{b2}]"), Some(scan.at(i, j)), None, format!("beta1={b1};beta2={b2}"));
            }
        }
        for (k, line) in iso.polylines.iter().enumerate() {
            for (p, &(b1, b2)) in line.iter().enumerate() {
                out.scalar("isocost_contour", "beta2", name, &format!("const-{}", res.reference_beta), Some(b2), None, format!("polyline={k};vertex={p};beta1={b1}"));
            }
        }
        for (label, (b1, b2)) in &iso.representatives {
            out.scalar("isocost_contour", "representative_beta1", name, label, Some(*b1), None, "");
            out.scalar("isocost_contour", "representative_beta2", name, label, Some(*b2), None, "");
        }
        // x = β₁, y = β₂
        let values = (0..n2).flat_map(|j| (0..n1).map(move |i| (i, j))).map(|(i, j)| Some(scan.at(i, j))).collect();
        let map = Heatmap {
            title: format!("terminal kinetic cost, two-piece schedules, {name}"),
            x_label: "beta1 (t < 1/2)".into(),
            y_label: "beta2 (t > 1/2)".into(),
            xs: scan.beta1.clone(),
            ys: scan.beta2.clone(),
            values,
            overlays: iso.polylines.clone(),
            markers: iso.representatives.clone(),
        };
        out.svg(&format!("isocost_{name}.svg"), map.render())?;

        let mut rows = vec![(format!("const {}", res.reference_beta), &gm, Schedule::constant(res.reference_beta)?)];
        for (label, (b1, b2)) in &iso.representatives {
            rows.push((format!("{label} [{b1:.2}, {b2:.2}]"), &gm, Schedule::pwc(vec![*b1, *b2])?));
        }
        let grid = snapshot_grid(
            &format!("iso-cost representatives, {name}"),
            &rows,
            res.snapshot_particles.min(res.particles),
            res.steps,
            res.seeds[0],
        )?;
        out.svg(&format!("isocost_snapshots_{name}.svg"), grid)?;
        out.summary(name, &iso);
    }
    Ok(())
}

pub fn negative_window_scan(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    for name in &res.models {
        let gm = load(name)?;
        let scan = optimizer::negative_window_scan(&gm, &res.budget(), &res.magnitudes, &res.deltas)?;
        let nd = scan.deltas.len();
        for (i, &b) in scan.magnitudes.iter().enumerate() {
            for (j, &d) in scan.deltas.iter().enumerate() {
                let guard = match guard_negative_window(b, d) {
                    GuardVerdict::Admissible { lhs } => format!("guard_lhs={lhs}"),
                    GuardVerdict::Rejected { .. } => "rejected".into(),
                };
                let label = format!("negwin-B{b}-d{d}");
                let extra = format!("B={b};delta={d};{guard}");
                out.scalar("negative_window", "kinetic_cost", name, &label, scan.kinetic[i * nd + j], None, extra.clone());
                out.scalar("negative_window", "total_cost", name, &label, scan.total[i * nd + j], None, extra);
            }
        }
        for (metric, values) in [("kinetic", &scan.kinetic), ("total", &scan.total)] {
            let map = Heatmap {
                title: format!("terminal {metric} cost, negative window, {name}"),
                x_label: "window width delta".into(),
                y_label: "magnitude B".into(),
                xs: scan.deltas.clone(),
                ys: scan.magnitudes.clone(),
                values: values.clone(),
                ..Default::default()
            };
            out.svg(&format!("negwin_{metric}_{name}.svg"), map.render())?;
        }
        out.summary(
            name,
            json!({"kinetic_argmin": scan.kinetic_argmin(), "total_argmin": scan.total_argmin(), "scan": scan}),
        );
    }
    Ok(())
}

/// Writes the trace, final schedules and report-budget re-evaluation of one
/// optimization. Returns the report objective of the final level.
fn report_pwc(res: &Resolved, out: &mut RunWriter, name: &str, gm: &GaussianMixture, kind: &ObjectiveKind, result: &PwcResult) -> CliResult<serde_json::Value> {
    let mut w = csv::Writer::from_path(out.dir.join(format!("trace_{name}.csv")))?;
    w.write_record(["level", "sweep", "coord", "beta", "objective", "accepted"])?;
    for e in &result.trace.entries {
        w.write_record([
            e.level.to_string(),
            e.sweep.to_string(),
            e.coord.map_or("null".into(), |c| c.to_string()),
            e.beta.to_string(),
            crate::output::fmt_opt(e.objective),
            e.accepted.to_string(),
        ])?;
    }
    w.flush()?;

    let report = Objective::new(
        kind.clone(),
        gm.clone(),
        Budget::new(res.report_particles, res.report_steps, res.seeds.clone()),
    )?;
    let mut levels = Vec::new();
    let mut schedule_chart = LineChart::new(format!("optimized schedules, {name}"), "t", "beta");
    for (schedule, (level, values, search_value)) in result.schedules.iter().zip(&result.trace.finals) {
        out.write_text(&format!("schedule_{name}_L{level}.json"), &format!("{}\n", schedule.to_json()))?;
        let k = values.len();
        for (c, v) in values.iter().enumerate() {
            out.scalar("pwc", "beta", name, schedule.label(), Some(*v), None, format!("level={level};interval={c};t_mid={}", (c as f64 + 0.5) / k as f64));
        }
        let eval = report.evaluate(schedule)?;
        out.scalar("pwc", "objective_search", name, schedule.label(), Some(*search_value), None, format!("level={level}"));
        for (seed, v) in res.seeds.iter().zip(&eval.values) {
            out.scalar("pwc", "objective_report", name, schedule.label(), Some(*v), Some(*seed), format!("level={level}"));
        }
        let a_level = match kind {
            ObjectiveKind::EnergyReg { a_level, .. } => Some(*a_level),
            ObjectiveKind::SharpnessReg { .. } => Some(res.a_level),
            _ => None,
        };
        let t_star = match a_level {
            Some(a_level) => {
                let ens = report.simulate(schedule, res.seeds[0])?;
                let a_hat = autocorrelations(&ens, gm, schedule)?.a_hat;
                let t = transition_time(&a_hat, a_level);
                out.scalar("pwc", "t_star", name, schedule.label(), Some(t), Some(res.seeds[0]), format!("level={level};a_level={a_level}"));
                Some(t)
            }
            None => None,
        };
        let pts: Vec<(f64, Option<f64>)> = values
            .iter()
            .enumerate()
            .flat_map(|(c, v)| [(c as f64 / k as f64, Some(*v)), ((c + 1) as f64 / k as f64, Some(*v))])
            .collect();
        schedule_chart = schedule_chart.line(Line::new(format!("K = {level}"), pts));
        levels.push(json!({
            "level": level,
            "values": values,
            "objective_search": search_value,
            "objective_report_mean": eval.mean,
            "objective_report_sd": eval.sd,
            "t_star": t_star,
        }));
    }
    out.svg(&format!("pwc_schedules_{name}.svg"), schedule_chart.render())?;

    let mut trace_chart = LineChart::new(format!("accepted objective per level, {name}"), "accepted move", "objective");
    let mut offset = 0usize;
    for (level, _, _) in &result.trace.finals {
        let acc = result.trace.accepted(*level);
        let pts = acc.iter().enumerate().map(|(i, v)| ((offset + i) as f64, Some(*v))).collect();
        offset += acc.len();
        trace_chart = trace_chart.line(Line::new(format!("K = {level}"), pts));
    }
    out.svg(&format!("pwc_trace_{name}.svg"), trace_chart.render())?;
    Ok(json!({"objective": kind, "levels": levels, "best_values": result.best_values, "best_objective": result.best_objective}))
}

pub fn pwc_optimize(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    for name in &res.models {
        let gm = load(name)?;
        let objective = Objective::new(res.objective.clone(), gm.clone(), res.budget())?;
        let result = optimize_pwc(&objective, &res.pwc)?;
        let summary = report_pwc(res, out, name, &gm, &res.objective, &result)?;
        out.summary(name, summary);
    }
    Ok(())
}

/// Constant-β scan of the energy objective, then (unless disabled) a PWC
/// search on its regularized form.
pub fn energy_reg(res: &Resolved, out: &mut RunWriter) -> CliResult<()> {
    let scheds = schedules(res)?;
    let kind = ObjectiveKind::EnergyReg {
        lambda_time: res.lambda_time,
        t_trans: res.t_trans,
        a_level: res.a_level,
    };
    for name in &res.models {
        let gm = load(name)?;
        let mut table: BTreeMap<String, [Vec<f64>; 3]> = BTreeMap::new();
        let mut energy_chart = LineChart::new(format!("mean energy along the flow, {name}"), "t", "E[E(x_t)]");
        for s in &scheds {
            for (n, &seed) in res.seeds.iter().enumerate() {
                let ens = simulate(&gm, name, s, res.particles, res.steps, res.stride, seed)?;
                let series = energy_series(&ens, &gm)?;
                out.series("energy", name, &series, Some(seed), "");
                let j = energy_objective(&ens, &gm)?;
                let a_hat = autocorrelations(&ens, &gm, s)?.a_hat;
                let reg = energy_regularized(&ens, &gm, &a_hat, res.lambda_time, res.t_trans, res.a_level)?;
                let t_star = transition_time(&a_hat, res.a_level);
                out.scalar("energy_scalars", "j_e", name, s.label(), Some(j), Some(seed), "");
                out.scalar("energy_scalars", "j_e_reg", name, s.label(), Some(reg), Some(seed), format!("lambda_time={};t_trans={}", res.lambda_time, res.t_trans));
                out.scalar("energy_scalars", "t_star", name, s.label(), Some(t_star), Some(seed), format!("a_level={}", res.a_level));
                let e = table.entry(s.label().to_string()).or_default();
                e[0].push(j);
                e[1].push(reg);
                e[2].push(t_star);
                if n == 0 {
                    energy_chart = energy_chart.line(Line::new(s.label(), as_points(&series)));
                }
            }
        }
        out.svg(&format!("energy_{name}.svg"), energy_chart.render())?;
        let col = |i: usize| scheds.iter().map(|s| table.get(s.label()).map(|v| mean(&v[i]))).collect::<Vec<_>>();
        let (j, reg, t_star) = (col(0), col(1), col(2));
        let mut chart = LineChart::new(format!("energy objective, {name}"), if all_constant(&scheds) { "beta" } else { "schedule index" }, "seed mean");
        if all_constant(&scheds) {
            chart = chart.log_x();
        }
        for (label, v) in [("J_E", &j), ("J_E regularized", &reg)] {
            chart = chart.line(Line::new(label, scheds.iter().enumerate().map(|(k, s)| (abscissa(s, k), v[k])).collect()));
        }
        out.svg(&format!("energy_objective_{name}.svg"), chart.render())?;

        let mut summary = json!({"j_e": j, "j_e_reg": reg, "t_star": t_star});
        if res.optimize {
            let objective = Objective::new(kind.clone(), gm.clone(), res.budget())?;
            let result = optimize_pwc(&objective, &res.pwc)?;
            summary["pwc"] = report_pwc(res, out, name, &gm, &kind, &result)?;
        }
        out.summary(name, summary);
    }
    Ok(())
}
