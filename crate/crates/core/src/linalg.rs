//! Small dense linear algebra on row-major slices.
//!
//! Dimensions here are tiny (the targets live in d <= 4), so everything is
//! written as straight loops over flat buffers; the hot paths never allocate.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &[f64], dim: usize) -> Result<Self> {
        assert_eq!(a.len(), dim * dim);
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = a[i * dim + j];
                for k in 0..j {
                    sum -= lower[i * dim + k] * lower[j * dim + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotSpd {
                            context: format!("pivot {i} = {sum}"),
                        });
                    }
                    lower[i * dim + i] = sum.sqrt();
                } else {
                    lower[i * dim + j] = sum / lower[j * dim + j];
                }
            }
        }
        Ok(Self { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self) -> &[f64] {
        &self.lower
    }

    /// Solves `L y = v` in place.
    #[inline]
    pub fn solve_lower_in_place(&self, v: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i + 1];
            let mut sum = v[i];
            for k in 0..i {
                sum -= row[k] * v[k];
            }
            v[i] = sum / row[i];
        }
    }

    /// Solves `Lᵀ x = v` in place.
    #[inline]
    pub fn solve_upper_in_place(&self, v: &mut [f64]) {
        let d = self.dim;
        for i in (0..d).rev() {
            let mut sum = v[i];
            for k in i + 1..d {
                sum -= self.lower[k * d + i] * v[k];
            }
            v[i] = sum / self.lower[i * d + i];
        }
    }

    /// Solves `A x = v` in place.
    #[inline]
    pub fn solve_in_place(&self, v: &mut [f64]) {
        self.solve_lower_in_place(v);
        self.solve_upper_in_place(v);
    }

    /// `½ log det A = Σ log L_ii`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.dim).map(|i| self.lower[i * self.dim + i].ln()).sum()
    }
}

/// Numerically stable `log Σ exp(v_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Replaces log-weights by normalized probabilities (max-shifted softmax).
pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).max(-745.0).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

/// Eigenvalues of a symmetric matrix, ascending. Cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[f64], dim: usize) -> Vec<f64> {
    assert_eq!(a.len(), dim * dim);
    if dim == 1 {
        return vec![a[0]];
    }
    if dim == 2 {
        let (p, q, r) = (a[0], 0.5 * (a[1] + a[2]), a[3]);
        let mean = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        return vec![mean - rad, mean + rad];
    }
    let mut m = a.to_vec();
    for sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * dim + j] * m[i * dim + j])
            .sum();
        let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale || sweep == 99 {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = m[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * dim + q] - m[p * dim + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let mkp = m[k * dim + p];
                    let mkq = m[k * dim + q];
                    m[k * dim + p] = c * mkp - s * mkq;
                    m[k * dim + q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p * dim + k];
                    let mqk = m[q * dim + k];
                    m[p * dim + k] = c * mpk - s * mqk;
                    m[q * dim + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..dim).map(|i| m[i * dim + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}
