//! Time-indexed scalar series on the midpoint grid.

use serde::{Deserialize, Serialize};

/// A named series; `None` marks a time where the statistic is undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub particles: usize,
    pub seed: u64,
    pub schedule_label: String,
}

impl DiagnosticSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<Option<f64>>) -> Self {
        assert_eq!(times.len(), values.len());
        Self {
            name: name.into(),
            times,
            values,
            particles: 0,
            seed: 0,
            schedule_label: String::new(),
        }
    }

    pub fn from_values(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self::new(name, times, values.into_iter().map(Some).collect())
    }

    pub fn with_provenance(mut self, particles: usize, seed: u64, schedule_label: &str) -> Self {
        self.particles = particles;
        self.seed = seed;
        self.schedule_label = schedule_label.to_string();
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Values with missing entries replaced by NaN.
    pub fn dense(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied().flatten()
    }

    /// Integral over `[0, 1]`: a rectangle `[0, t₀]` at the first value,
    /// trapezoids between samples and a rectangle from the last sample to 1.
    /// On a uniform midpoint grid this is the midpoint rule.
    pub fn integral(&self) -> Option<f64> {
        self.integral_to(1.0)
    }

    /// The same quadrature truncated at `upper` (linear interpolation inside
    /// the last trapezoid). Missing values make the result missing.
    pub fn integral_to(&self, upper: f64) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.values.iter().copied().collect();
        let vals = vals?;
        let ts = &self.times;
        if ts.is_empty() || upper <= 0.0 {
            return Some(0.0);
        }
        if upper <= ts[0] {
            return Some(upper * vals[0]);
        }
        let mut total = ts[0] * vals[0];
        for k in 1..ts.len() {
            let (t0, t1) = (ts[k - 1], ts[k]);
            if upper <= t1 {
                let w = (upper - t0) / (t1 - t0);
                let v = vals[k - 1] + w * (vals[k] - vals[k - 1]);
                return Some(total + 0.5 * (upper - t0) * (vals[k - 1] + v));
            }
            total += 0.5 * (t1 - t0) * (vals[k - 1] + vals[k]);
        }
        Some(total + (upper - ts[ts.len() - 1]) * vals[vals.len() - 1])
    }

    /// Mean over `[0, 1]` by the same quadrature.
    pub fn time_mean(&self) -> Option<f64> {
        self.integral()
    }

    /// Running integral from 0 to each sample time.
    pub fn cumulative(&self, name: impl Into<String>) -> DiagnosticSeries {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = Some(0.0);
        for k in 0..self.len() {
            let dt = if k == 0 { self.times[0] } else { self.times[k] - self.times[k - 1] };
            acc = match (acc, self.values[k], k) {
                (Some(a), Some(v), 0) => Some(a + dt * v),
                (Some(a), Some(v), _) => self.values[k - 1].map(|p| a + 0.5 * dt * (p + v)),
                _ => None,
            };
            out.push(acc);
        }
        DiagnosticSeries {
            name: name.into(),
            times: self.times.clone(),
            values: out,
            particles: self.particles,
            seed: self.seed,
            schedule_label: self.schedule_label.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_rule_on_uniform_grid() {
        let t: Vec<f64> = (0..10).map(|n| (n as f64 + 0.5) / 10.0).collect();
        let s = DiagnosticSeries::from_values("x", t.clone(), t.iter().map(|x| 3.0 * x * x).collect());
        let midpoint: f64 = t.iter().map(|x| 3.0 * x * x / 10.0).sum();
        assert!((s.integral().unwrap() - midpoint).abs() < 1e-14);
        let c = DiagnosticSeries::from_values("c", t.clone(), vec![2.0; 10]);
        assert!((c.integral().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(c.integral_to(0.0), Some(0.0));
        assert!((c.integral_to(0.5).unwrap() - 1.0).abs() < 1e-15);
        let cum = c.cumulative("C");
        assert!((cum.last().unwrap() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn missing_values_propagate() {
        let s = DiagnosticSeries::new("x", vec![0.25, 0.75], vec![Some(1.0), None]);
        assert_eq!(s.integral(), None);
        assert_eq!(s.cumulative("c").values, vec![Some(0.25), None]);
    }
}
