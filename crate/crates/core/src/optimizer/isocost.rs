//! Two-piece `(β₁, β₂)` scans and the iso-level of a reference schedule.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::Objective;
use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Objective means on a tensor grid, `values[i · beta2.len() + j]` at
/// `(beta1[i], beta2[j])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoPieceScan {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub values: Vec<f64>,
}

impl TwoPieceScan {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.beta2.len() + j]
    }
}

fn key(b1: f64, b2: f64) -> (u64, u64) {
    (b1.to_bits(), b2.to_bits())
}

/// Midpoints inserted into every interval across which the scan changes by
/// more than `fraction` of its range.
pub fn refine_axis(axis: &[f64], jumps: &[f64], range: f64, fraction: f64) -> Vec<f64> {
    let mut out = vec![axis[0]];
    for k in 1..axis.len() {
        if jumps[k - 1] > fraction * range {
            out.push(0.5 * (axis[k - 1] + axis[k]));
        }
        out.push(axis[k]);
    }
    out
}

/// Scans `pwc([β₁, β₂])` on the grid, then `refinements` times inserts
/// midpoints where the map varies rapidly and rescans the new points.
pub fn two_piece_scan(objective: &Objective, beta1: &[f64], beta2: &[f64], refinements: usize) -> Result<TwoPieceScan> {
    if beta1.len() < 2 || beta2.len() < 2 {
        return Err(Error::Config("two-piece scan needs at least 2 values per axis".into()));
    }
    let mut cache: HashMap<(u64, u64), f64> = HashMap::new();
    let (mut a1, mut a2) = (beta1.to_vec(), beta2.to_vec());
    let mut round = 0;
    loop {
        let missing: Vec<(f64, f64)> = a1
            .iter()
            .flat_map(|&b1| a2.iter().map(move |&b2| (b1, b2)))
            .filter(|&(b1, b2)| !cache.contains_key(&key(b1, b2)))
            .collect();
        let fresh = missing
            .par_iter()
            .map(|&(b1, b2)| objective.value(&Schedule::pwc(vec![b1, b2])?))
            .collect::<Result<Vec<_>>>()?;
        for (&(b1, b2), v) in missing.iter().zip(fresh) {
            cache.insert(key(b1, b2), v);
        }
        let scan = TwoPieceScan {
            values: a1.iter().flat_map(|&b1| a2.iter().map(|&b2| cache[&key(b1, b2)]).collect::<Vec<_>>()).collect(),
            beta1: a1.clone(),
            beta2: a2.clone(),
        };
        if round == refinements {
            return Ok(scan);
        }
        round += 1;
        let (lo, hi) = scan.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let (n1, n2) = (a1.len(), a2.len());
        let jumps1: Vec<f64> = (1..n1)
            .map(|i| (0..n2).map(|j| (scan.at(i, j) - scan.at(i - 1, j)).abs()).fold(0.0, f64::max))
            .collect();
        let jumps2: Vec<f64> = (1..n2)
            .map(|j| (0..n1).map(|i| (scan.at(i, j) - scan.at(i, j - 1)).abs()).fold(0.0, f64::max))
            .collect();
        // refine intervals whose change exceeds that of a linear map
        a1 = refine_axis(&a1, &jumps1, hi - lo, 1.0 / (n1 - 1) as f64);
        a2 = refine_axis(&a2, &jumps2, hi - lo, 1.0 / (n2 - 1) as f64);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoCostLevel {
    pub level: f64,
    pub reference_beta: f64,
    /// Connected pieces of the contour in `(β₁, β₂)`.
    pub polylines: Vec<Vec<(f64, f64)>>,
    /// Points with the smallest `β₁`, the smallest `β₂`, and the arc-length
    /// midpoint of the longest piece.
    pub representatives: Vec<(String, (f64, f64))>,
    pub warning: Option<String>,
}

/// Contour of the scan at the value of the constant schedule `β₀`, traced by
/// marching squares. A level outside the scanned range gives an empty
/// contour and a warning.
pub fn iso_cost_level(scan: &TwoPieceScan, objective: &Objective, reference_beta: f64) -> Result<IsoCostLevel> {
    let level = objective.value(&Schedule::constant(reference_beta)?)?;
    Ok(contour(scan, level, reference_beta))
}

pub(crate) fn contour(scan: &TwoPieceScan, level: f64, reference_beta: f64) -> IsoCostLevel {
    let (lo, hi) = scan.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mut out = IsoCostLevel {
        level,
        reference_beta,
        polylines: Vec::new(),
        representatives: Vec::new(),
        warning: None,
    };
    if !(level >= lo && level <= hi) {
        out.warning = Some(format!("level {level} outside the scanned range [{lo}, {hi}]"));
        return out;
    }
    let segments = march(scan, level);
    out.polylines = chain(&segments);
    let all = out.polylines.iter().flatten().copied();
    if let Some(p) = all.clone().min_by(|a, b| a.0.total_cmp(&b.0)) {
        out.representatives.push(("min_beta1".into(), p));
    }
    if let Some(p) = all.min_by(|a, b| a.1.total_cmp(&b.1)) {
        out.representatives.push(("min_beta2".into(), p));
    }
    if let Some(line) = out.polylines.iter().max_by(|a, b| arc_length(a).total_cmp(&arc_length(b))) {
        out.representatives.push(("mid_arc".into(), arc_midpoint(line)));
    }
    out
}

type Point = (f64, f64);

fn march(scan: &TwoPieceScan, level: f64) -> Vec<(Point, Point)> {
    let (n1, n2) = (scan.beta1.len(), scan.beta2.len());
    let node = |i: usize, j: usize| (scan.beta1[i], scan.beta2[j]);
    // crossing on the edge between two nodes, always interpolated from the
    // lower-indexed end so neighbouring cells agree bit for bit
    let cross = |p: (usize, usize), q: (usize, usize)| -> Point {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let (vp, vq) = (scan.at(p.0, p.1), scan.at(q.0, q.1));
        let w = (level - vp) / (vq - vp);
        let (a, b) = (node(p.0, p.1), node(q.0, q.1));
        (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
    };
    let mut segments = Vec::new();
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let inside: Vec<bool> = corners.iter().map(|&(a, b)| scan.at(a, b) >= level).collect();
            let crossings: Vec<Point> = (0..4)
                .filter(|&k| inside[k] != inside[(k + 1) % 4])
                .map(|k| cross(corners[k], corners[(k + 1) % 4]))
                .collect();
            match crossings.len() {
                2 => segments.push((crossings[0], crossings[1])),
                4 => {
                    // saddle: the centre value decides which corners connect
                    let centre = corners.iter().map(|&(a, b)| scan.at(a, b)).sum::<f64>() / 4.0;
                    let joined = (centre >= level) == inside[0];
                    if joined {
                        segments.push((crossings[0], crossings[1]));
                        segments.push((crossings[2], crossings[3]));
                    } else {
                        segments.push((crossings[3], crossings[0]));
                        segments.push((crossings[1], crossings[2]));
                    }
                }
                _ => {}
            }
        }
    }
    segments
}

fn pkey(p: Point) -> (u64, u64) {
    key(p.0, p.1)
}

fn chain(segments: &[(Point, Point)]) -> Vec<Vec<Point>> {
    let mut ends: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        ends.entry(pkey(*a)).or_default().push(k);
        ends.entry(pkey(*b)).or_default().push(k);
    }
    // a contour through a grid node can produce zero-length segments
    let mut used: Vec<bool> = segments.iter().map(|(a, b)| pkey(*a) == pkey(*b)).collect();
    let next = |p: Point, used: &[bool]| -> Option<usize> { ends[&pkey(p)].iter().copied().find(|&k| !used[k]) };
    let mut lines = Vec::new();
    // open chains start at an endpoint of degree one
    let mut order: Vec<usize> = (0..segments.len()).filter(|&k| {
        let (a, b) = segments[k];
        ends[&pkey(a)].len() == 1 || ends[&pkey(b)].len() == 1
    }).collect();
    order.extend(0..segments.len());
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (first, second) = if ends[&pkey(b)].len() == 1 { (b, a) } else { (a, b) };
        let mut line = vec![first, second];
        let mut tip = second;
        while let Some(k) = next(tip, &used) {
            used[k] = true;
            let (p, q) = segments[k];
            tip = if pkey(p) == pkey(tip) { q } else { p };
            line.push(tip);
        }
        line.dedup_by(|p, q| pkey(*p) == pkey(*q));
        lines.push(line);
    }
    lines
}

fn arc_length(line: &[Point]) -> f64 {
    line.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum()
}

fn arc_midpoint(line: &[Point]) -> Point {
    let half = 0.5 * arc_length(line);
    let mut run = 0.0;
    for w in line.windows(2) {
        let len = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        if run + len >= half && len > 0.0 {
            let s = (half - run) / len;
            return (w[0].0 + s * (w[1].0 - w[0].0), w[0].1 + s * (w[1].1 - w[0].1));
        }
        run += len;
    }
    line[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(level: f64) -> IsoCostLevel {
        let axis: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let values = axis.iter().flat_map(|&x| axis.iter().map(move |&y| x + y)).collect();
        let scan = TwoPieceScan {
            beta1: axis.clone(),
            beta2: axis,
            values,
        };
        contour(&scan, level, 0.0)
    }

    #[test]
    fn contour_of_a_plane_is_one_straight_line() {
        let c = plane(4.5);
        assert_eq!(c.polylines.len(), 1);
        for &(x, y) in &c.polylines[0] {
            assert!((x + y - 4.5).abs() < 1e-12);
        }
        let (_, mid) = c.representatives.iter().find(|r| r.0 == "mid_arc").unwrap();
        assert!((mid.0 - 2.25).abs() < 1e-12 && (mid.1 - 2.25).abs() < 1e-12);
    }

    #[test]
    fn level_outside_range_is_empty() {
        let c = plane(20.0);
        assert!(c.polylines.is_empty());
        assert!(c.warning.is_some());
    }

    #[test]
    fn refinement_inserts_midpoints_where_the_jump_is_large() {
        assert_eq!(refine_axis(&[0.0, 1.0, 2.0], &[0.1, 5.0], 5.0, 0.5), vec![0.0, 1.0, 1.5, 2.0]);
    }
}
