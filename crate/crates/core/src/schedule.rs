//! Stiffness schedules and the Green's-function coefficients they induce.
//!
//! For a potential `V_t(x) = β_t ‖x‖² / 2` the backward kernel is Gaussian with
//! coefficients `(a⁻, b⁻, c⁻)` and the forward kernel from the origin has
//! precision `a⁺`. They solve the Riccati system
//!
//! ```text
//!   ȧ⁻ = (a⁻)² − β_t,   ḃ⁻ = a⁻ b⁻,   ċ⁻ = (b⁻)²,   ȧ⁺ = β_t − (a⁺)²
//! ```
//!
//! with `a⁻, b⁻, c⁻ ~ 1/(1−t)` as `t → 1` and `a⁺ ~ 1/t` as `t → 0`.
//!
//! On a piece of constant `β` every solution is a Möbius map of the value at
//! the piece edge. With `C(s) = cosh(√β s)`, `S(s) = sinh(√β s)/√β` (the
//! trigonometric analogues for `β < 0`, and `1, s` for `β = 0`) and
//! `D = C + a_R S`, the backward sweep over a distance `s` from the right edge
//! reads
//!
//! ```text
//!   a = (β S + a_R C) / D,   b = b_R / D,   c = c_R − b_R² S / D
//! ```
//!
//! which uses `C² − β S² = 1`. The same map with `s` replaced by the
//! distance from the left edge propagates `a⁺` forward. Every schedule kind
//! (constant, uniform piecewise-constant, negative window) is reduced to a
//! list of maximal constant pieces and evaluated with these maps; junction
//! values are cached so a query costs O(log K).

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude a piece is evaluated with the exact `β = 0` forms.
pub const SMALL_BETA: f64 = 1e-8;

/// Queries closer than this to `t = 1` are clamped.
pub const TERMINAL_CLAMP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    Constant { beta: f64 },
    /// Uniform edges `k / K`, `values.len() = K`.
    Pwc { values: Vec<f64> },
    /// `β = −magnitude` on `[(1−δ)/2, (1+δ)/2]`, zero elsewhere.
    NegativeWindow { magnitude: f64, delta: f64 },
}

/// Outcome of the negative-window well-posedness guard.
#[derive(Clone, Debug, PartialEq)]
pub enum GuardVerdict {
    Admissible { lhs: f64 },
    Rejected { reason: String },
}

impl GuardVerdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, GuardVerdict::Admissible { .. })
    }
}

/// Checks `(1−δ)/2 · √B · tan(δ√B) < 1` together with `δ√B < π/2`.
pub fn guard_negative_window(magnitude: f64, delta: f64) -> GuardVerdict {
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return GuardVerdict::Rejected {
            reason: format!("window magnitude B = {magnitude} must be positive"),
        };
    }
    if !(delta > 0.0 && delta < 0.5) {
        return GuardVerdict::Rejected {
            reason: format!("window width δ = {delta} must lie in (0, 1/2)"),
        };
    }
    let root = magnitude.sqrt();
    let phase = delta * root;
    if phase >= FRAC_PI_2 {
        return GuardVerdict::Rejected {
            reason: format!("δ√B = {phase} reaches the tangent singularity π/2"),
        };
    }
    let lhs = 0.5 * (1.0 - delta) * root * phase.tan();
    if lhs < 1.0 {
        GuardVerdict::Admissible { lhs }
    } else {
        GuardVerdict::Rejected {
            reason: format!("(1−δ)/2·√B·tan(δ√B) = {lhs} ≥ 1"),
        }
    }
}

/// Coefficients of the forward/backward kernels at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreensCoeffs {
    pub t: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub c_minus: f64,
    /// `K_t = c⁻_t − a⁺_1`, the precision of the reweighting Gaussian.
    pub precision: f64,
}

impl GreensCoeffs {
    /// Mean gain of the reweighting Gaussian, `b⁻ / K`.
    pub fn shift(&self) -> f64 {
        self.b_minus / self.precision
    }
}

/// `J_t = (a⁻)² − (b⁻)²` and `Δ_t = a⁻ − c⁻`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JDiagnostics {
    pub j: f64,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug)]
struct Flow {
    cosine: f64,
    sine: f64,
    tangent: f64,
}

fn flow(beta: f64, s: f64) -> Flow {
    if beta.abs() < SMALL_BETA {
        Flow {
            cosine: 1.0,
            sine: s,
            tangent: s,
        }
    } else if beta > 0.0 {
        let w = beta.sqrt();
        let x = w * s;
        Flow {
            cosine: x.cosh(),
            sine: x.sinh() / w,
            tangent: x.tanh() / w,
        }
    } else {
        let w = (-beta).sqrt();
        let x = w * s;
        Flow {
            cosine: x.cos(),
            sine: x.sin() / w,
            tangent: x.tan() / w,
        }
    }
}

#[inline]
fn effective(beta: f64) -> f64 {
    if beta.abs() < SMALL_BETA {
        0.0
    } else {
        beta
    }
}

/// `(a, b, c)` of the backward kernel.
type Backward = [f64; 3];

/// Backward state a distance `s` before the terminal time on the final piece.
fn terminal_state(beta: f64, s: f64) -> Backward {
    let f = flow(beta, s);
    if effective(beta) < 0.0 {
        let a = f.cosine / f.sine;
        [a, 1.0 / f.sine, a]
    } else {
        let a = 1.0 / f.tangent;
        [a, 1.0 / (f.cosine * f.tangent), a]
    }
}

/// Backward state a distance `s` before a right edge carrying `right`.
fn propagate_backward(right: Backward, beta: f64, s: f64) -> (Backward, f64) {
    let [ar, br, cr] = right;
    let beta = effective(beta);
    let f = flow(beta, s);
    if beta < 0.0 {
        let d = f.cosine + ar * f.sine;
        (
            [
                (beta * f.sine + ar * f.cosine) / d,
                br / d,
                cr - br * br * f.sine / d,
            ],
            d,
        )
    } else {
        let d1 = 1.0 + ar * f.tangent;
        (
            [
                (beta * f.tangent + ar) / d1,
                br / (f.cosine * d1),
                cr - br * br * f.tangent / d1,
            ],
            d1,
        )
    }
}

/// `a⁺` a distance `r` after a left edge carrying `left` (`None` at `t = 0`).
fn propagate_forward(left: Option<f64>, beta: f64, r: f64) -> (f64, f64) {
    let beta = effective(beta);
    let f = flow(beta, r);
    match left {
        None if beta < 0.0 => (f.cosine / f.sine, f.sine),
        None => (1.0 / f.tangent, f.tangent),
        Some(al) if beta < 0.0 => {
            let d = f.cosine + al * f.sine;
            ((beta * f.sine + al * f.cosine) / d, d)
        }
        Some(al) => {
            let d1 = 1.0 + al * f.tangent;
            ((beta * f.tangent + al) / d1, d1)
        }
    }
}

/// Maximal constant pieces with cached junction values.
#[derive(Clone, Debug)]
struct Profile {
    edges: Vec<f64>,
    betas: Vec<f64>,
    /// Backward state at the right edge of every piece but the last.
    right_states: Vec<Backward>,
    /// `a⁺` at the left edge of every piece (`None` for the first).
    left_plus: Vec<Option<f64>>,
    a_plus_one: f64,
}

impl Profile {
    fn build(edges_in: &[f64], betas_in: &[f64]) -> Result<Self> {
        // merge adjacent equal pieces so equal schedule functions share one
        // representation (and therefore bit-identical coefficients)
        let mut edges = vec![edges_in[0]];
        let mut betas: Vec<f64> = Vec::new();
        for (k, &beta) in betas_in.iter().enumerate() {
            if betas.last() == Some(&beta) {
                *edges.last_mut().unwrap() = edges_in[k + 1];
            } else {
                betas.push(beta);
                edges.push(edges_in[k + 1]);
            }
        }
        let pieces = betas.len();

        let wp = |piece: usize, reason: String| Error::WellPosedness { piece, reason };

        let mut right_states = vec![[0.0; 3]; pieces.saturating_sub(1)];
        let mut state: Option<Backward> = None;
        for p in (0..pieces).rev() {
            let beta = betas[p];
            let len = edges[p + 1] - edges[p];
            if beta < -SMALL_BETA && (-beta).sqrt() * len >= std::f64::consts::PI {
                return Err(wp(p, "negative piece longer than half a period".into()));
            }
            let left = match state {
                None => terminal_state(beta, len),
                Some(right) => {
                    right_states[p] = right;
                    let (left, denom) = propagate_backward(right, beta, len);
                    if !(denom > 0.0) {
                        return Err(wp(p, format!("backward denominator {denom} ≤ 0")));
                    }
                    left
                }
            };
            if left.iter().any(|v| !v.is_finite()) || !(left[1] > 0.0) {
                return Err(wp(p, format!("backward coefficients {left:?} at left edge")));
            }
            state = Some(left);
        }

        let mut left_plus = vec![None; pieces];
        let mut a_plus: Option<f64> = None;
        for p in 0..pieces {
            left_plus[p] = a_plus;
            let len = edges[p + 1] - edges[p];
            let (value, denom) = propagate_forward(a_plus, betas[p], len);
            if !(denom > 0.0) || !value.is_finite() {
                return Err(wp(p, format!("forward branch singular (denominator {denom})")));
            }
            if !(value > 0.0) {
                return Err(wp(p, format!("a⁺ = {value} ≤ 0 at right edge")));
            }
            a_plus = Some(value);
        }

        Ok(Self {
            edges,
            betas,
            right_states,
            left_plus,
            a_plus_one: a_plus.expect("at least one piece"),
        })
    }

    fn piece_of(&self, t: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|&e| e <= t)
    }

    fn backward_on(&self, p: usize, t: f64) -> Backward {
        let s = self.edges[p + 1] - t;
        if p + 1 == self.betas.len() {
            terminal_state(self.betas[p], s)
        } else {
            propagate_backward(self.right_states[p], self.betas[p], s).0
        }
    }

    fn forward_on(&self, p: usize, t: f64) -> f64 {
        propagate_forward(self.left_plus[p], self.betas[p], t - self.edges[p]).0
    }

    fn coeffs_on(&self, p: usize, t: f64) -> Result<GreensCoeffs> {
        let [a_minus, b_minus, c_minus] = self.backward_on(p, t);
        let a_plus = self.forward_on(p, t);
        let precision = c_minus - self.a_plus_one;
        if !(precision > 0.0) || !precision.is_finite() {
            return Err(Error::Precision { t, precision });
        }
        if ![a_plus, a_minus, b_minus, c_minus].iter().all(|v| v.is_finite()) {
            return Err(Error::WellPosedness {
                piece: p,
                reason: format!("non-finite coefficient at t = {t}"),
            });
        }
        Ok(GreensCoeffs {
            t,
            a_plus,
            a_minus,
            b_minus,
            c_minus,
            precision,
        })
    }
}

fn check_time(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain { t });
    }
    Ok(t.min(1.0 - TERMINAL_CLAMP))
}

/// A stiffness protocol `β_t` on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Schedule {
    kind: ScheduleKind,
    label: String,
    profile: Profile,
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.label == other.label
    }
}

fn check_stiffness(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "stiffness {beta} must be finite and non-negative"
        )));
    }
    Ok(())
}

impl Schedule {
    pub fn constant(beta: f64) -> Result<Self> {
        check_stiffness(beta)?;
        Ok(Self {
            kind: ScheduleKind::Constant { beta },
            label: format!("const-{beta}"),
            profile: Profile::build(&[0.0, 1.0], &[beta])?,
        })
    }

    pub fn pwc(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSchedule("PWC schedule needs K ≥ 1 values".into()));
        }
        for &v in &values {
            check_stiffness(v)?;
        }
        let k = values.len();
        let edges: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        let label = format!(
            "pwc{k}-[{}]",
            values
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        let profile = Profile::build(&edges, &values)?;
        Ok(Self {
            kind: ScheduleKind::Pwc { values },
            label,
            profile,
        })
    }

    pub fn negative_window(magnitude: f64, delta: f64) -> Result<Self> {
        if let GuardVerdict::Rejected { reason } = guard_negative_window(magnitude, delta) {
            return Err(Error::InvalidSchedule(reason));
        }
        let (left, right) = (0.5 * (1.0 - delta), 0.5 * (1.0 + delta));
        Ok(Self {
            kind: ScheduleKind::NegativeWindow { magnitude, delta },
            label: format!("negwin-B{magnitude}-d{delta}"),
            profile: Profile::build(&[0.0, left, right, 1.0], &[0.0, -magnitude, 0.0])?,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `β_t`; at an edge the value of the piece to the right is returned.
    pub fn beta_at(&self, t: f64) -> f64 {
        self.profile.betas[self.profile.piece_of(t)]
    }

    /// Edges and values of the maximal constant pieces.
    pub fn pieces(&self) -> (&[f64], &[f64]) {
        (&self.profile.edges, &self.profile.betas)
    }

    pub fn a_plus_one(&self) -> f64 {
        self.profile.a_plus_one
    }

    /// Kernel coefficients at an interior time.
    pub fn coeffs(&self, t: f64) -> Result<GreensCoeffs> {
        let t = check_time(t)?;
        self.profile.coeffs_on(self.profile.piece_of(t), t)
    }

    /// Coefficients evaluated with the closed form of a given piece, which
    /// may be queried at either of its edges.
    pub fn coeffs_on_piece(&self, piece: usize, t: f64) -> Result<GreensCoeffs> {
        let t = check_time(t)?;
        let (lo, hi) = (self.profile.edges[piece], self.profile.edges[piece + 1]);
        if t < lo || t > hi {
            return Err(Error::Domain { t });
        }
        self.profile.coeffs_on(piece, t)
    }

    pub fn to_spec(&self) -> ScheduleSpec {
        let mut spec = ScheduleSpec {
            kind: String::new(),
            beta: None,
            values: None,
            magnitude: None,
            delta: None,
            label: Some(self.label.clone()),
        };
        match &self.kind {
            ScheduleKind::Constant { beta } => {
                spec.kind = "const".into();
                spec.beta = Some(*beta);
            }
            ScheduleKind::Pwc { values } => {
                spec.kind = "pwc".into();
                spec.values = Some(values.clone());
            }
            ScheduleKind::NegativeWindow { magnitude, delta } => {
                spec.kind = "negwin".into();
                spec.magnitude = Some(*magnitude);
                spec.delta = Some(*delta);
            }
        }
        spec
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("schedule spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScheduleSpec = serde_json::from_str(text)?;
        spec.build()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        ScheduleSpec::deserialize(deserializer)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}

/// On-disk form: `{"kind": "const"|"pwc"|"negwin", "beta", "values", "B", "delta", "label"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        let missing = |field: &str| {
            Error::InvalidSchedule(format!("`{}` schedule requires `{field}`", self.kind))
        };
        let schedule = match self.kind.as_str() {
            "const" => Schedule::constant(self.beta.ok_or_else(|| missing("beta"))?)?,
            "pwc" => Schedule::pwc(self.values.clone().ok_or_else(|| missing("values"))?)?,
            "negwin" => Schedule::negative_window(
                self.magnitude.ok_or_else(|| missing("B"))?,
                self.delta.ok_or_else(|| missing("delta"))?,
            )?,
            other => {
                return Err(Error::InvalidSchedule(format!(
                    "unknown kind `{other}` (const, pwc, negwin)"
                )))
            }
        };
        Ok(match &self.label {
            Some(label) => schedule.with_label(label.clone()),
            None => schedule,
        })
    }
}

/// Constant-stiffness closed forms, evaluated directly.
pub fn coeffs_const(beta: f64, t: f64) -> Result<GreensCoeffs> {
    check_stiffness(beta)?;
    let t = check_time(t)?;
    let (a_plus, a_minus, b_minus, a_plus_one) = if beta < SMALL_BETA {
        (1.0 / t, 1.0 / (1.0 - t), 1.0 / (1.0 - t), 1.0)
    } else {
        let w = beta.sqrt();
        let back = (1.0 - t) * w;
        (
            w / (t * w).tanh(),
            w / back.tanh(),
            w / back.sinh(),
            w / w.tanh(),
        )
    };
    let precision = a_minus - a_plus_one;
    if !(precision > 0.0) {
        return Err(Error::Precision { t, precision });
    }
    Ok(GreensCoeffs {
        t,
        a_plus,
        a_minus,
        b_minus,
        c_minus: a_minus,
        precision,
    })
}

/// Coefficients of a uniform piecewise-constant schedule.
pub fn coeffs_pwc(schedule: &Schedule, t: f64) -> Result<GreensCoeffs> {
    match schedule.kind() {
        ScheduleKind::Pwc { .. } | ScheduleKind::Constant { .. } => schedule.coeffs(t),
        _ => Err(Error::InvalidSchedule(format!(
            "`{}` is not piecewise constant with uniform edges",
            schedule.label()
        ))),
    }
}

/// Coefficients of the three-piece negative window.
pub fn coeffs_negative_window(schedule: &Schedule, t: f64) -> Result<GreensCoeffs> {
    match schedule.kind() {
        ScheduleKind::NegativeWindow { .. } => schedule.coeffs(t),
        _ => Err(Error::InvalidSchedule(format!(
            "`{}` is not a negative window",
            schedule.label()
        ))),
    }
}

pub fn j_identity(schedule: &Schedule, t: f64) -> Result<JDiagnostics> {
    let c = schedule.coeffs(t)?;
    Ok(JDiagnostics {
        j: c.a_minus * c.a_minus - c.b_minus * c.b_minus,
        delta: c.a_minus - c.c_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn zero_stiffness_midpoint() {
        let c = coeffs_const(0.0, 0.5).unwrap();
        assert_eq!((c.a_plus, c.a_minus, c.b_minus, c.c_minus), (2.0, 2.0, 2.0, 2.0));
        let s = Schedule::constant(0.0).unwrap().coeffs(0.5).unwrap();
        assert_eq!((s.a_plus, s.a_minus, s.b_minus, s.c_minus), (2.0, 2.0, 2.0, 2.0));
    }

    #[test]
    fn unit_stiffness_midpoint() {
        // coth(0.5), 1/sinh(0.5)
        let coth = 0.5f64.cosh() / 0.5f64.sinh();
        let csch = 1.0 / 0.5f64.sinh();
        for c in [
            coeffs_const(1.0, 0.5).unwrap(),
            Schedule::constant(1.0).unwrap().coeffs(0.5).unwrap(),
        ] {
            assert!(close(c.a_plus, coth, 1e-14));
            assert!(close(c.a_minus, coth, 1e-14));
            assert!(close(c.c_minus, coth, 1e-14));
            assert!(close(c.b_minus, csch, 1e-14));
        }
        assert!((coth - 2.163953).abs() < 1e-6);
        assert!((csch - 1.919035).abs() < 1e-6);
    }

    #[test]
    fn precision_vanishes_at_start() {
        let c = coeffs_const(4.0, 1e-12).unwrap();
        assert!(c.precision < 1e-10);
        let s = Schedule::pwc(vec![0.3, 7.0, 2.0]).unwrap();
        assert!(s.coeffs(1e-12).unwrap().precision < 1e-9);
    }

    #[test]
    fn rejects_boundary_times() {
        for t in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(coeffs_const(1.0, t), Err(Error::Domain { .. })));
            assert!(Schedule::constant(1.0).unwrap().coeffs(t).is_err());
        }
        // clamped, not rejected
        let c = Schedule::constant(1.0).unwrap().coeffs(1.0 - 1e-12).unwrap();
        assert!(c.a_minus.is_finite() && c.t == 1.0 - TERMINAL_CLAMP);
    }

    #[test]
    fn equal_pwc_matches_constant() {
        let s = Schedule::pwc(vec![2.0; 4]).unwrap();
        assert_eq!(s.pieces().1.len(), 1);
        for i in 1..50 {
            let t = i as f64 / 50.0;
            let a = s.coeffs(t).unwrap();
            let b = coeffs_const(2.0, t).unwrap();
            for (x, y) in [
                (a.a_plus, b.a_plus),
                (a.a_minus, b.a_minus),
                (a.b_minus, b.b_minus),
                (a.c_minus, b.c_minus),
            ] {
                assert!(close(x, y, 1e-12), "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn two_piece_terminal_value() {
        let s = Schedule::pwc(vec![0.0, 4.0]).unwrap();
        let c = s.coeffs(0.75).unwrap();
        let want = 2.0 / (2.0f64 * 0.25).tanh();
        assert!(close(c.a_minus, want, 1e-14));
        assert!((want - 4.32791).abs() < 1e-5);
    }

    #[test]
    fn junction_continuity_is_exact() {
        let s = Schedule::pwc(vec![0.5, 3.0, 0.0, 9.0]).unwrap();
        for k in 1..4 {
            let t = k as f64 / 4.0;
            let left = s.coeffs_on_piece(k - 1, t).unwrap();
            let right = s.coeffs_on_piece(k, t).unwrap();
            assert_eq!(left.a_minus, right.a_minus);
            assert_eq!(left.b_minus, right.b_minus);
            assert_eq!(left.c_minus, right.c_minus);
            assert_eq!(left.a_plus, right.a_plus);
        }
    }

    #[test]
    fn guard_cases() {
        match guard_negative_window(1.0, 0.25) {
            GuardVerdict::Admissible { lhs } => {
                assert!((lhs - 0.375 * 0.25f64.tan()).abs() < 1e-15);
                assert!((lhs - 0.0957).abs() < 1e-4);
            }
            other => panic!("{other:?}"),
        }
        assert!(guard_negative_window(1e-12, 0.4).is_admissible());
        assert!(!guard_negative_window(40.0, 0.3).is_admissible()); // δ√B ≈ 1.897 > π/2
        assert!(!guard_negative_window(9.0, 0.4).is_admissible());
        assert!(Schedule::negative_window(40.0, 0.3).is_err());
        assert!(Schedule::negative_window(1.0, 0.6).is_err());
    }

    #[test]
    fn vanishing_window_reduces_to_zero_stiffness() {
        let s = Schedule::negative_window(1e-10, 0.3).unwrap();
        for t in [0.05, 0.3, 0.5, 0.64, 0.9] {
            let c = s.coeffs(t).unwrap();
            let z = coeffs_const(0.0, t).unwrap();
            assert!(close(c.a_plus, z.a_plus, 1e-8));
            assert!(close(c.a_minus, z.a_minus, 1e-8));
            assert!(close(c.b_minus, z.b_minus, 1e-8));
            assert!(close(c.c_minus, z.c_minus, 1e-8));
        }
    }

    #[test]
    fn j_identity_constant() {
        let s = Schedule::constant(3.0).unwrap();
        for t in [0.1, 0.4, 0.77, 0.95] {
            let j = j_identity(&s, t).unwrap();
            assert!((j.j - 3.0).abs() < 1e-10, "{j:?}");
            assert!(j.delta.abs() < 1e-12);
        }
    }

    #[test]
    fn delta_on_inner_piece_tracks_c() {
        // J − β and b² both scale with exp(2∫a) on a constant piece, so
        // (J − β)/b² is frozen and Δ moves in lockstep with c
        let s = Schedule::pwc(vec![1.0, 4.0]).unwrap();
        let pts = [0.05, 0.15, 0.25, 0.35, 0.45];
        let ratio: Vec<f64> = pts
            .iter()
            .map(|&t| {
                let c = s.coeffs(t).unwrap();
                let j = j_identity(&s, t).unwrap();
                (j.j - 1.0) / (c.b_minus * c.b_minus)
            })
            .collect();
        for r in &ratio {
            assert!((r - ratio[0]).abs() <= 1e-10 * ratio[0].abs(), "{ratio:?}");
        }
        let drift: Vec<f64> = pts
            .iter()
            .map(|&t| {
                let c = s.coeffs(t).unwrap();
                j_identity(&s, t).unwrap().delta - ratio[0] * c.c_minus
            })
            .collect();
        for d in &drift {
            assert!((d - drift[0]).abs() <= 1e-10, "{drift:?}");
        }
        let d0 = j_identity(&s, 0.05).unwrap().delta;
        let d1 = j_identity(&s, 0.45).unwrap().delta;
        assert!((d0 - d1).abs() > 0.1, "Δ is not frozen before the last piece");
        for t in [0.55, 0.7, 0.9] {
            let j = j_identity(&s, t).unwrap();
            assert!(j.delta.abs() <= 1e-9 && (j.j - 4.0).abs() <= 1e-9, "{j:?}");
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let s = Schedule::pwc(vec![0.0, 1.5]).unwrap().with_label("two");
        let back = Schedule::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        let w = Schedule::from_json(r#"{"kind":"negwin","B":2.0,"delta":0.2}"#).unwrap();
        assert!(matches!(w.kind(), ScheduleKind::NegativeWindow { .. }));
        assert!(Schedule::from_json(r#"{"kind":"pwc"}"#).is_err());
        assert!(Schedule::from_json(r#"{"kind":"pwc","values":[1.0,-2.0]}"#).is_err());
        assert!(Schedule::from_json(r#"{"kind":"spline","values":[1.0]}"#).is_err());
    }
}
