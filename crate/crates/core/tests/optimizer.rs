use adapid_core::models::regular3x3;
use adapid_core::optimizer::{
    argmin, golden_section, grid_scan, iso_cost_level, negative_window_scan, optimize_pwc, two_piece_scan, Budget,
    Objective, ObjectiveKind, PwcConfig,
};
use adapid_core::Schedule;

fn small(kind: ObjectiveKind) -> Objective {
    Objective::new(kind, regular3x3(), Budget::new(200, 60, vec![3])).unwrap()
}

#[test]
fn golden_section_uses_a_fixed_budget() {
    let mut calls = 0;
    let (x, v, trials) = golden_section(0.0, 25.0, 20, |b| {
        calls += 1;
        (b - 3.7).powi(2)
    });
    assert_eq!(calls, 20);
    assert_eq!(trials.len(), 20);
    let width = 25.0 * 0.618_033_988_75f64.powi(18);
    assert!((x - 3.7).abs() <= width, "{x}");
    assert!(v <= width * width);
}

#[test]
fn golden_section_treats_failures_as_infinite() {
    let (x, v, _) = golden_section(0.0, 10.0, 20, |b| if b > 6.0 { f64::INFINITY } else { (b - 5.0).abs() });
    assert!((x - 5.0).abs() < 0.05 && v < 0.05);
}

#[test]
fn single_point_grid_matches_direct_evaluation() {
    let obj = small(ObjectiveKind::KineticCost);
    let rows = grid_scan(&obj, &[2.0]).unwrap();
    assert_eq!(rows.len(), 1);
    let direct = obj.evaluate(&Schedule::constant(2.0).unwrap()).unwrap();
    assert_eq!(rows[0].mean, direct.mean);
    assert!(grid_scan(&obj, &[]).is_err());
}

#[test]
fn grid_scan_reports_seed_spread() {
    let obj = Objective::new(ObjectiveKind::KineticCost, regular3x3(), Budget::new(100, 40, vec![1, 2, 3])).unwrap();
    let rows = grid_scan(&obj, &[0.5, 5.0]).unwrap();
    for r in &rows {
        assert_eq!(r.values.len(), 3);
        assert!(r.sd > 0.0);
        let mean = r.values.iter().sum::<f64>() / 3.0;
        assert!((r.mean - mean).abs() <= 1e-12 * mean);
    }
    assert_eq!(rows, grid_scan(&obj, &[0.5, 5.0]).unwrap());
}

#[test]
fn level_one_matches_the_grid_minimizer() {
    let obj = small(ObjectiveKind::MeanOmegaSq);
    let grid: Vec<f64> = (0..=25).map(|k| k as f64).collect();
    let rows = grid_scan(&obj, &grid).unwrap();
    let best = argmin(&rows).unwrap();
    let config = PwcConfig {
        levels: vec![1],
        ..PwcConfig::default()
    };
    let r = optimize_pwc(&obj, &config).unwrap();
    let beta = r.best_values[0];
    assert!((beta - best.beta).abs() <= 1.0, "golden {beta} vs grid {}", best.beta);
    assert!(r.best_objective <= best.mean);
}

#[test]
fn refinement_warm_starts_and_is_reproducible() {
    let obj = small(ObjectiveKind::KineticCost);
    let config = PwcConfig {
        levels: vec![1, 2, 4],
        evals_per_coord: 8,
        max_sweeps: 2,
        ..PwcConfig::default()
    };
    let r = optimize_pwc(&obj, &config).unwrap();
    let trace = &r.trace;
    for pair in trace.finals.windows(2) {
        let (_, _, end) = pair[0];
        let start = trace
            .entries
            .iter()
            .find(|e| e.level == pair[1].0 && e.coord.is_none())
            .unwrap();
        assert_eq!(start.objective, Some(end));
    }
    for &level in &config.levels {
        let accepted = trace.accepted(level);
        for w in accepted.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
    let again = optimize_pwc(&obj, &config).unwrap();
    assert_eq!(again.trace, r.trace);
    assert_eq!(r.schedules.len(), 3);
    assert!(r.best_values.iter().all(|&b| (0.0..=25.0).contains(&b)));
}

#[test]
fn invalid_refinement_levels_are_rejected() {
    let obj = small(ObjectiveKind::KineticCost);
    for levels in [vec![], vec![2, 3], vec![4, 2]] {
        let config = PwcConfig {
            levels,
            ..PwcConfig::default()
        };
        assert!(optimize_pwc(&obj, &config).is_err());
    }
    let config = PwcConfig {
        bounds: (5.0, 1.0),
        ..PwcConfig::default()
    };
    assert!(optimize_pwc(&obj, &config).is_err());
}

#[test]
fn iso_level_passes_through_the_diagonal_reference() {
    let obj = small(ObjectiveKind::KineticCost);
    let axis = [0.5, 1.0, 2.0, 4.0, 8.0];
    let scan = two_piece_scan(&obj, &axis, &axis, 0).unwrap();
    let iso = iso_cost_level(&scan, &obj, 2.0).unwrap();
    assert_eq!(iso.level, scan.at(2, 2));
    let near = iso
        .polylines
        .iter()
        .flatten()
        .any(|&(a, b)| (a - 2.0).abs() <= 1e-12 && (b - 2.0).abs() <= 1e-12);
    assert!(near, "{:?}", iso.polylines);
    assert_eq!(iso.representatives.len(), 3);
    let again = iso_cost_level(&two_piece_scan(&obj, &axis, &axis, 0).unwrap(), &obj, 2.0).unwrap();
    assert_eq!(again, iso);
}

#[test]
fn refined_scan_keeps_the_original_nodes() {
    let obj = small(ObjectiveKind::KineticCost);
    let axis = [0.5, 4.0, 16.0];
    let coarse = two_piece_scan(&obj, &axis, &axis, 0).unwrap();
    let fine = two_piece_scan(&obj, &axis, &axis, 1).unwrap();
    assert!(fine.beta1.len() + fine.beta2.len() > 2 * axis.len(), "{:?} {:?} {:?}", fine.beta1, fine.beta2, coarse.values);
    for (i, b1) in axis.iter().enumerate() {
        for (j, b2) in axis.iter().enumerate() {
            let fi = fine.beta1.iter().position(|v| v == b1).unwrap();
            let fj = fine.beta2.iter().position(|v| v == b2).unwrap();
            assert_eq!(fine.at(fi, fj), coarse.at(i, j));
        }
    }
}

#[test]
fn negative_window_scan_masks_the_guard() {
    let budget = Budget::new(200, 60, vec![1]);
    let magnitudes = [1.0, 10.0, 40.0];
    let deltas = [0.1, 0.3, 0.45];
    let scan = negative_window_scan(&regular3x3(), &budget, &magnitudes, &deltas).unwrap();
    for (i, &b) in magnitudes.iter().enumerate() {
        for (j, &d) in deltas.iter().enumerate() {
            let ok = adapid_core::guard_negative_window(b, d).is_admissible();
            assert_eq!(scan.admissible(i, j), ok);
        }
    }
    assert!(!scan.admissible(2, 2));
    assert_eq!(scan.kinetic_argmin(), Some((1.0, 0.1)));
}
