//! The three canonical 2-D targets: a regular 3×3 grid of Gaussians and two
//! seeded perturbations of it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;

pub const MODEL_NAMES: [&str; 3] = ["regular3x3", "perturbedA", "perturbedB"];

pub const GRID_SPACING: f64 = 4.0;
pub const GRID_VARIANCE: f64 = 0.3;
pub const JITTER: f64 = 0.8;
pub const VARIANCE_RANGE: (f64, f64) = (0.15, 0.6);
pub const DIRICHLET_CONCENTRATION: f64 = 5.0;
pub const SEED_A: u64 = 101;
pub const SEED_B: u64 = 202;

fn grid_means() -> Vec<f64> {
    let mut means = Vec::with_capacity(18);
    for i in -1..=1 {
        for j in -1..=1 {
            means.push(GRID_SPACING * i as f64);
            means.push(GRID_SPACING * j as f64);
        }
    }
    means
}

fn isotropic(variances: &[f64]) -> Vec<f64> {
    variances.iter().flat_map(|&v| [v, 0.0, 0.0, v]).collect()
}

pub fn regular3x3() -> GaussianMixture {
    GaussianMixture::from_flat(2, vec![1.0 / 9.0; 9], grid_means(), isotropic(&[GRID_VARIANCE; 9]))
        .expect("regular grid is valid")
}

/// Jitters, then variances, then weights, all from one seeded stream.
pub fn perturbed(seed: u64) -> GaussianMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = grid_means();
    for m in means.iter_mut() {
        *m += rng.random_range(-JITTER..=JITTER);
    }
    let (lo, hi) = (VARIANCE_RANGE.0.ln(), VARIANCE_RANGE.1.ln());
    let variances: Vec<f64> = (0..9).map(|_| rng.random_range(lo..=hi).exp()).collect();
    let gamma = Gamma::new(DIRICHLET_CONCENTRATION, 1.0).expect("valid shape");
    let raw: Vec<f64> = (0..9).map(|_| gamma.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    GaussianMixture::from_flat(2, weights, means, isotropic(&variances)).expect("perturbed grid is valid")
}

pub fn model(name: &str) -> Result<GaussianMixture> {
    match name {
        "regular3x3" => Ok(regular3x3()),
        "perturbedA" => Ok(perturbed(SEED_A)),
        "perturbedB" => Ok(perturbed(SEED_B)),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}
