//! Gaussian-mixture targets and their probe posteriors.
//!
//! The probe posterior at `(t, x)` is the product of the target with the
//! reweighting Gaussian `N(y | (b⁻/K) x, I/K)`. Each component gives an
//! expert with covariance `Σ̃_n = (I + K Σ_n)⁻¹ Σ_n`, mean
//! `μ̃_n = (I + K Σ_n)⁻¹ (μ_n + b⁻ Σ_n x)` and evidence
//! `w_n = N(ν | μ_n, Σ_n + I/K)`, `ν = (b⁻/K) x`. Nothing here forms `Σ_n⁻¹`;
//! all solves go through Cholesky factors and weights stay in log space.

use std::f64::consts::PI;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, softmax_in_place, Cholesky};
use crate::schedule::GreensCoeffs;

/// Where the energy scale is pinned to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyCalibration {
    /// `E(0) = 0`.
    #[default]
    Origin,
    /// `min_x E(x) = 0`.
    Minimum,
}

#[derive(Clone, Debug)]
pub struct GaussianMixture {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    covs: Vec<f64>,
    chols: Vec<Cholesky>,
    /// `log ϱ_n − ½ log det Σ_n − (d/2) log 2π`.
    log_norms: Vec<f64>,
    calibration: EnergyCalibration,
    energy_offset: f64,
}

/// On-disk form: `{"weights": [...], "means": [[...]], "covs": [[[...]]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<Vec<Vec<f64>>>,
}

impl GaussianMixture {
    /// Means are `N × d` and covariances `N × d × d`, both flattened row-major.
    pub fn from_flat(dim: usize, weights: Vec<f64>, means: Vec<f64>, covs: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 || dim == 0 {
            return Err(Error::InvalidMixture("need N ≥ 1 components in d ≥ 1".into()));
        }
        if means.len() != n * dim || covs.len() != n * dim * dim {
            return Err(Error::InvalidMixture(format!(
                "shape mismatch: {n} weights, {} mean entries, {} covariance entries in d = {dim}",
                means.len(),
                covs.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMixture("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, not 1")));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidMixture("means must be finite".into()));
        }
        let mut chols = Vec::with_capacity(n);
        for k in 0..n {
            let c = &covs[k * dim * dim..(k + 1) * dim * dim];
            for i in 0..dim {
                for j in 0..i {
                    if (c[i * dim + j] - c[j * dim + i]).abs() > 1e-12 * (1.0 + c[i * dim + j].abs()) {
                        return Err(Error::InvalidMixture(format!("covariance {k} is not symmetric")));
                    }
                }
            }
            chols.push(Cholesky::new(c, dim).map_err(|_| Error::NotSpd {
                context: format!("covariance of component {k}"),
            })?);
        }
        let log_norms = (0..n)
            .map(|k| weights[k].ln() - chols[k].half_log_det() - 0.5 * dim as f64 * (2.0 * PI).ln())
            .collect();
        let mut gm = Self {
            dim,
            weights,
            means,
            covs,
            chols,
            log_norms,
            calibration: EnergyCalibration::Origin,
            energy_offset: 0.0,
        };
        gm.set_calibration(EnergyCalibration::Origin);
        Ok(gm)
    }

    pub fn from_spec(spec: &MixtureSpec) -> Result<Self> {
        let dim = spec.means.first().map_or(0, Vec::len);
        if spec.means.len() != spec.weights.len() || spec.covs.len() != spec.weights.len() {
            return Err(Error::InvalidMixture("weights, means and covs must have equal length".into()));
        }
        let mut means = Vec::new();
        let mut covs = Vec::new();
        for (m, c) in spec.means.iter().zip(&spec.covs) {
            if m.len() != dim || c.len() != dim || c.iter().any(|row| row.len() != dim) {
                return Err(Error::InvalidMixture("inconsistent dimensions".into()));
            }
            means.extend_from_slice(m);
            for row in c {
                covs.extend_from_slice(row);
            }
        }
        Self::from_flat(dim, spec.weights.clone(), means, covs)
    }

    pub fn to_spec(&self) -> MixtureSpec {
        let d = self.dim;
        MixtureSpec {
            weights: self.weights.clone(),
            means: self.means.chunks(d).map(<[f64]>::to_vec).collect(),
            covs: self
                .covs
                .chunks(d * d)
                .map(|c| c.chunks(d).map(<[f64]>::to_vec).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("mixture spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn with_calibration(mut self, calibration: EnergyCalibration) -> Self {
        self.set_calibration(calibration);
        self
    }

    fn set_calibration(&mut self, calibration: EnergyCalibration) {
        self.calibration = calibration;
        self.energy_offset = match calibration {
            EnergyCalibration::Origin => self.log_density(&vec![0.0; self.dim]),
            EnergyCalibration::Minimum => self
                .modes()
                .iter()
                .map(|m| self.log_density(m))
                .fold(f64::NEG_INFINITY, f64::max),
        };
    }

    pub fn calibration(&self) -> EnergyCalibration {
        self.calibration
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn cov(&self, k: usize) -> &[f64] {
        &self.covs[k * self.dim * self.dim..(k + 1) * self.dim * self.dim]
    }

    /// `Σ ϱ_n μ_n`.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for k in 0..self.components() {
            for (mi, &v) in m.iter_mut().zip(self.mean(k)) {
                *mi += self.weights[k] * v;
            }
        }
        m
    }

    /// `log ϱ_n N(x | μ_n, Σ_n)` for every component.
    pub fn component_log_densities_into(&self, x: &[f64], diff: &mut [f64], out: &mut [f64]) {
        for k in 0..self.components() {
            for i in 0..self.dim {
                diff[i] = x[i] - self.means[k * self.dim + i];
            }
            self.chols[k].solve_lower_in_place(diff);
            let q: f64 = diff.iter().map(|v| v * v).sum();
            out[k] = self.log_norms[k] - 0.5 * q;
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut diff = vec![0.0; self.dim];
        let mut lp = vec![0.0; self.components()];
        self.component_log_densities_into(x, &mut diff, &mut lp);
        log_sum_exp(&lp)
    }

    /// `E(x) = −log p(x) + c`, calibrated at construction.
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.energy_offset - self.log_density(x)
    }

    /// Allocation-free energy using caller scratch (`diff`: d, `lp`: N).
    pub fn energy_with(&self, x: &[f64], diff: &mut [f64], lp: &mut [f64]) -> f64 {
        self.component_log_densities_into(x, diff, lp);
        self.energy_offset - log_sum_exp(lp)
    }

    /// `∇ log p(x)`.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut lp = vec![0.0; self.components()];
        let mut diff = vec![0.0; d];
        self.component_log_densities_into(x, &mut diff, &mut lp);
        softmax_in_place(&mut lp);
        let mut out = vec![0.0; d];
        for k in 0..self.components() {
            for i in 0..d {
                diff[i] = x[i] - self.means[k * d + i];
            }
            self.chols[k].solve_in_place(&mut diff);
            for i in 0..d {
                out[i] -= lp[k] * diff[i];
            }
        }
        out
    }

    /// Unit-diffusion Langevin drift `∇ log p / 2`.
    pub fn langevin_drift(&self, x: &[f64]) -> Vec<f64> {
        self.score(x).into_iter().map(|v| 0.5 * v).collect()
    }

    pub fn responsibilities(&self, y: &[f64]) -> Vec<f64> {
        let mut lp = vec![0.0; self.components()];
        let mut diff = vec![0.0; self.dim];
        self.responsibilities_into(y, &mut diff, &mut lp);
        lp
    }

    pub fn responsibilities_into(&self, y: &[f64], diff: &mut [f64], out: &mut [f64]) {
        self.component_log_densities_into(y, diff, out);
        softmax_in_place(out);
    }

    /// `M` i.i.d. draws, flattened `M × d`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        self.sample_with_labels(count, seed).0
    }

    /// Draws together with the component each one came from.
    pub fn sample_with_labels(&self, count: usize, seed: u64) -> (Vec<f64>, Vec<usize>) {
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = WeightedIndex::new(&self.weights).expect("weights validated");
        let mut out = vec![0.0; count * d];
        let mut labels = Vec::with_capacity(count);
        let mut z = vec![0.0; d];
        for row in out.chunks_mut(d) {
            let k = pick.sample(&mut rng);
            labels.push(k);
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let l = self.chols[k].factor();
            for i in 0..d {
                let lz: f64 = (0..=i).map(|j| l[i * d + j] * z[j]).sum();
                row[i] = self.means[k * d + i] + lz;
            }
        }
        (out, labels)
    }

    /// Local maxima reached by the mean-shift fixed point from every mean.
    pub fn modes(&self) -> Vec<Vec<f64>> {
        let mut modes: Vec<Vec<f64>> = Vec::new();
        for k in 0..self.components() {
            let m = self.find_mode(self.mean(k));
            if !modes.iter().any(|o| dist(o, &m) < 1e-6) {
                modes.push(m);
            }
        }
        modes
    }

    /// Mean shift `x ← H⁻¹ Σ r_n Σ_n⁻¹ μ_n` with `H = Σ r_n Σ_n⁻¹`.
    pub fn find_mode(&self, start: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let precisions: Vec<Vec<f64>> = (0..self.components())
            .map(|k| {
                let mut p = vec![0.0; d * d];
                for j in 0..d {
                    let mut e = vec![0.0; d];
                    e[j] = 1.0;
                    self.chols[k].solve_in_place(&mut e);
                    for i in 0..d {
                        p[i * d + j] = e[i];
                    }
                }
                p
            })
            .collect();
        let mut x = start.to_vec();
        for _ in 0..10_000 {
            let r = self.responsibilities(&x);
            let mut h = vec![0.0; d * d];
            for k in 0..self.components() {
                for (hi, pi) in h.iter_mut().zip(&precisions[k]) {
                    *hi += r[k] * pi;
                }
            }
            let mut step = self.score(&x);
            let Ok(hc) = Cholesky::new(&h, d) else { break };
            hc.solve_in_place(&mut step);
            let size = step.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (xi, s) in x.iter_mut().zip(&step) {
                *xi += s;
            }
            if size < 1e-14 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()) {
                break;
            }
        }
        x
    }

    /// Per-time operator with everything that depends only on `t` cached.
    pub fn posterior_operator(&self, coeffs: &GreensCoeffs) -> Result<PosteriorOperator<'_>> {
        PosteriorOperator::new(self, coeffs)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Probe posterior at one `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbePosterior {
    /// Normalized `ϱ_n w_n`.
    pub weights: Vec<f64>,
    /// Unnormalized `log ϱ_n w_n`.
    pub log_weights: Vec<f64>,
    /// `N × d`.
    pub means: Vec<f64>,
    /// `N × d × d`.
    pub covs: Vec<f64>,
}

/// Scratch buffers for the allocation-free posterior paths.
#[derive(Clone, Debug)]
pub struct PosteriorScratch {
    log_w: Vec<f64>,
    diff: Vec<f64>,
    means: Vec<f64>,
    grads: Vec<f64>,
}

impl PosteriorScratch {
    pub fn new(gm: &GaussianMixture) -> Self {
        let (n, d) = (gm.components(), gm.dim());
        Self {
            log_w: vec![0.0; n],
            diff: vec![0.0; d],
            means: vec![0.0; n * d],
            grads: vec![0.0; n * d],
        }
    }

    /// Normalized weights from the last evaluation.
    pub fn weights(&self) -> &[f64] {
        &self.log_w
    }
}

pub struct PosteriorOperator<'a> {
    gm: &'a GaussianMixture,
    coeffs: GreensCoeffs,
    shift: f64,
    s_chols: Vec<Cholesky>,
    log_w_const: Vec<f64>,
    /// `(I + K Σ_n)⁻¹ μ_n`.
    base_means: Vec<f64>,
    /// `Σ̃_n = (I + K Σ_n)⁻¹ Σ_n`.
    post_covs: Vec<f64>,
}

impl<'a> PosteriorOperator<'a> {
    pub fn new(gm: &'a GaussianMixture, coeffs: &GreensCoeffs) -> Result<Self> {
        let k_prec = coeffs.precision;
        if !(k_prec > 0.0) || !k_prec.is_finite() {
            return Err(Error::Precision {
                t: coeffs.t,
                precision: k_prec,
            });
        }
        let (n, d) = (gm.components(), gm.dim());
        let mut s_chols = Vec::with_capacity(n);
        let mut log_w_const = Vec::with_capacity(n);
        let mut base_means = vec![0.0; n * d];
        let mut post_covs = vec![0.0; n * d * d];
        let mut work = vec![0.0; d * d];
        let mut col = vec![0.0; d];
        for k in 0..n {
            let cov = gm.cov(k);
            work.copy_from_slice(cov);
            for i in 0..d {
                work[i * d + i] += 1.0 / k_prec;
            }
            let s = Cholesky::new(&work, d).map_err(|_| Error::NotSpd {
                context: format!("Σ + I/K for component {k} at t = {}", coeffs.t),
            })?;
            log_w_const.push(
                gm.weights[k].ln() - s.half_log_det() - 0.5 * d as f64 * (2.0 * PI).ln(),
            );
            s_chols.push(s);

            // A = I + KΣ = K S, so A⁻¹ v = S⁻¹ v / K
            let s = s_chols.last().unwrap();
            let bm = &mut base_means[k * d..(k + 1) * d];
            bm.copy_from_slice(gm.mean(k));
            s.solve_in_place(bm);
            bm.iter_mut().for_each(|v| *v /= k_prec);
            for j in 0..d {
                for i in 0..d {
                    col[i] = cov[i * d + j];
                }
                s.solve_in_place(&mut col);
                for i in 0..d {
                    post_covs[k * d * d + i * d + j] = col[i] / k_prec;
                }
            }
            // symmetrize away rounding
            let pc = &mut post_covs[k * d * d..(k + 1) * d * d];
            for i in 0..d {
                for j in 0..i {
                    let avg = 0.5 * (pc[i * d + j] + pc[j * d + i]);
                    pc[i * d + j] = avg;
                    pc[j * d + i] = avg;
                }
            }
        }
        Ok(Self {
            gm,
            coeffs: *coeffs,
            shift: coeffs.b_minus / k_prec,
            s_chols,
            log_w_const,
            base_means,
            post_covs,
        })
    }

    pub fn coeffs(&self) -> &GreensCoeffs {
        &self.coeffs
    }

    pub fn mixture(&self) -> &GaussianMixture {
        self.gm
    }

    /// Fills normalized weights into `scratch.log_w` and expert means into
    /// `scratch.means`; with `grads` also stores `∂ log w_n / ∂x`.
    fn experts(&self, x: &[f64], scratch: &mut PosteriorScratch, grads: bool) {
        let (n, d) = (self.gm.components(), self.gm.dim());
        let b = self.coeffs.b_minus;
        for k in 0..n {
            let diff = &mut scratch.diff;
            for i in 0..d {
                diff[i] = self.shift * x[i] - self.gm.means[k * d + i];
            }
            let s = &self.s_chols[k];
            s.solve_lower_in_place(diff);
            let q: f64 = diff.iter().map(|v| v * v).sum();
            scratch.log_w[k] = self.log_w_const[k] - 0.5 * q;
            if grads {
                s.solve_upper_in_place(diff);
                for i in 0..d {
                    scratch.grads[k * d + i] = -self.shift * diff[i];
                }
            }
            let pc = &self.post_covs[k * d * d..(k + 1) * d * d];
            for i in 0..d {
                let mut v = self.base_means[k * d + i];
                for j in 0..d {
                    v += b * pc[i * d + j] * x[j];
                }
                scratch.means[k * d + i] = v;
            }
        }
    }

    pub fn log_weights(&self, x: &[f64]) -> Vec<f64> {
        let mut scratch = PosteriorScratch::new(self.gm);
        self.experts(x, &mut scratch, false);
        scratch.log_w
    }

    pub fn posterior(&self, x: &[f64]) -> ProbePosterior {
        let mut scratch = PosteriorScratch::new(self.gm);
        self.experts(x, &mut scratch, false);
        let log_weights = scratch.log_w.clone();
        let mut weights = scratch.log_w;
        softmax_in_place(&mut weights);
        ProbePosterior {
            weights,
            log_weights,
            means: scratch.means,
            covs: self.post_covs.clone(),
        }
    }

    /// `ŷ(t; x)` into `out`.
    pub fn predicted_state_into(&self, x: &[f64], scratch: &mut PosteriorScratch, out: &mut [f64]) {
        let (n, d) = (self.gm.components(), self.gm.dim());
        self.experts(x, scratch, false);
        softmax_in_place(&mut scratch.log_w);
        out[..d].fill(0.0);
        for k in 0..n {
            let r = scratch.log_w[k];
            for i in 0..d {
                out[i] += r * scratch.means[k * d + i];
            }
        }
    }

    pub fn predicted_state(&self, x: &[f64]) -> Vec<f64> {
        let mut scratch = PosteriorScratch::new(self.gm);
        let mut out = vec![0.0; self.gm.dim()];
        self.predicted_state_into(x, &mut scratch, &mut out);
        out
    }

    /// `ŷ` and `∂ŷ/∂x` (row-major, `jac[i·d + j] = ∂ŷ_i/∂x_j`).
    pub fn predicted_jacobian_into(
        &self,
        x: &[f64],
        scratch: &mut PosteriorScratch,
        y_hat: &mut [f64],
        jac: &mut [f64],
    ) {
        let (n, d) = (self.gm.components(), self.gm.dim());
        let b = self.coeffs.b_minus;
        self.experts(x, scratch, true);
        softmax_in_place(&mut scratch.log_w);
        y_hat[..d].fill(0.0);
        for k in 0..n {
            for i in 0..d {
                y_hat[i] += scratch.log_w[k] * scratch.means[k * d + i];
            }
        }
        jac[..d * d].fill(0.0);
        for k in 0..n {
            let r = scratch.log_w[k];
            let pc = &self.post_covs[k * d * d..(k + 1) * d * d];
            for i in 0..d {
                let dm = scratch.means[k * d + i] - y_hat[i];
                for j in 0..d {
                    jac[i * d + j] += r * (b * pc[i * d + j] + dm * scratch.grads[k * d + j]);
                }
            }
        }
    }

    pub fn predicted_jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.gm.dim();
        let mut scratch = PosteriorScratch::new(self.gm);
        let mut y = vec![0.0; d];
        let mut jac = vec![0.0; d * d];
        self.predicted_jacobian_into(x, &mut scratch, &mut y, &mut jac);
        jac
    }

    /// Optimal drift `u* = b⁻ ŷ − a⁻ x` into `out`.
    pub fn drift_into(&self, x: &[f64], scratch: &mut PosteriorScratch, out: &mut [f64]) {
        self.predicted_state_into(x, scratch, out);
        let (a, b) = (self.coeffs.a_minus, self.coeffs.b_minus);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = b * *o - a * xi;
        }
    }
}

pub fn energy(gm: &GaussianMixture, x: &[f64]) -> f64 {
    gm.energy(x)
}

pub fn score(gm: &GaussianMixture, x: &[f64]) -> Vec<f64> {
    gm.score(x)
}

pub fn langevin_drift(gm: &GaussianMixture, x: &[f64]) -> Vec<f64> {
    gm.langevin_drift(x)
}

pub fn sample_target(gm: &GaussianMixture, count: usize, seed: u64) -> Vec<f64> {
    gm.sample(count, seed)
}

pub fn probe_posterior(gm: &GaussianMixture, coeffs: &GreensCoeffs, x: &[f64]) -> Result<ProbePosterior> {
    Ok(gm.posterior_operator(coeffs)?.posterior(x))
}

pub fn predicted_state(gm: &GaussianMixture, coeffs: &GreensCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    Ok(gm.posterior_operator(coeffs)?.predicted_state(x))
}

pub fn predicted_jacobian(gm: &GaussianMixture, coeffs: &GreensCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    Ok(gm.posterior_operator(coeffs)?.predicted_jacobian(x))
}

/// `log N(y | (b⁻/K) x, I/K)`.
pub fn log_reweight_density(coeffs: &GreensCoeffs, x: &[f64], y: &[f64]) -> Result<f64> {
    let k = coeffs.precision;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Precision {
            t: coeffs.t,
            precision: k,
        });
    }
    let shift = coeffs.b_minus / k;
    let q: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - shift * xi).powi(2)).sum();
    Ok(0.5 * x.len() as f64 * (k / (2.0 * PI)).ln() - 0.5 * k * q)
}

pub fn responsibilities(gm: &GaussianMixture, y: &[f64]) -> Vec<f64> {
    gm.responsibilities(y)
}

pub fn predicted_responsibilities(gm: &GaussianMixture, coeffs: &GreensCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    Ok(gm.responsibilities(&predicted_state(gm, coeffs, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::coeffs_const;

    fn scalar(mean: f64, var: f64) -> GaussianMixture {
        GaussianMixture::from_flat(1, vec![1.0], vec![mean], vec![var]).unwrap()
    }

    fn coeffs(k: f64, b: f64) -> GreensCoeffs {
        GreensCoeffs {
            t: 0.5,
            a_plus: 1.0,
            a_minus: 1.0,
            b_minus: b,
            c_minus: 1.0,
            precision: k,
        }
    }

    #[test]
    fn standard_normal_energy_and_score() {
        let gm = GaussianMixture::from_flat(2, vec![1.0], vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0])
            .unwrap();
        assert_eq!(gm.energy(&[0.0, 0.0]), 0.0);
        assert!((gm.energy(&[1.0, 2.0]) - 2.5).abs() < 1e-14);
        assert_eq!(gm.score(&[0.3, -1.0]), vec![-0.3, 1.0]);
        assert_eq!(gm.langevin_drift(&[0.3, -1.0]), vec![-0.15, 0.5]);
    }

    #[test]
    fn scalar_posterior_mean() {
        let gm = scalar(3.0, 2.0);
        let post = probe_posterior(&gm, &coeffs(1.0, 1.0), &[1.0]).unwrap();
        assert!((post.means[0] - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(post.weights, vec![1.0]);
        // Σ̃ = (1/σ² + K)⁻¹
        assert!((post.covs[0] - 1.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn single_gaussian_closed_forms() {
        let var = 0.7;
        let gm = GaussianMixture::from_flat(2, vec![1.0], vec![0.5, -1.0], vec![var, 0.0, 0.0, var])
            .unwrap();
        let c = coeffs_const(2.0, 0.3).unwrap();
        let x = [0.4, 1.1];
        let y = predicted_state(&gm, &c, &x).unwrap();
        let jac = predicted_jacobian(&gm, &c, &x).unwrap();
        let den = 1.0 / var + c.precision;
        for i in 0..2 {
            let want = (gm.mean(0)[i] / var + c.b_minus * x[i]) / den;
            assert!((y[i] - want).abs() < 1e-13);
        }
        let g = c.b_minus / den;
        for (got, want) in jac.iter().zip([g, 0.0, 0.0, g]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn reweight_density_value() {
        let lr = log_reweight_density(&coeffs(2.0, 2.0), &[1.0], &[1.0]).unwrap();
        assert!((lr - 0.5 * (1.0 / PI).ln()).abs() < 1e-14);
        assert!(log_reweight_density(&coeffs(0.0, 1.0), &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let gm = GaussianMixture::from_flat(
            2,
            vec![0.25, 0.75],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 0.2, 0.2, 2.0, 0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let back = GaussianMixture::from_json(&gm.to_json()).unwrap();
        assert_eq!(back.to_spec(), gm.to_spec());
        assert!(GaussianMixture::from_json(r#"{"weights":[1.0],"means":[[0.0]],"covs":[[[-1.0]]]}"#).is_err());
        assert!(GaussianMixture::from_json(r#"{"weights":[0.5],"means":[[0.0]],"covs":[[[1.0]]]}"#).is_err());
    }
}
