//! Euler–Maruyama simulation of `dx = u* dt + dW` from `x(0) = 0`.
//!
//! Step `n` advances `x_n → x_{n+1}` with `h = 1/T` and drift evaluated at
//! the midpoint time `t_n = (n + ½)/T` using the state at step start. The
//! recorded snapshot for step `n` is the post-step state, labelled `t_n`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::{GaussianMixture, PosteriorOperator, PosteriorScratch};
use crate::models;
use crate::noise::NoiseStream;
use crate::schedule::{GreensCoeffs, Schedule};

pub const OVERFLOW_NORM: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub particles: usize,
    pub steps: usize,
    pub seed: u64,
    pub record_stride: usize,
    pub model: String,
    pub schedule: Schedule,
}

impl SimConfig {
    pub fn new(model: &str, schedule: Schedule, particles: usize, steps: usize, seed: u64) -> Self {
        Self {
            particles,
            steps,
            seed,
            record_stride: 1,
            model: model.to_string(),
            schedule,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.steps < 2 || self.record_stride == 0 {
            return Err(Error::Config(format!(
                "need M ≥ 1, T ≥ 2, stride ≥ 1 (got M = {}, T = {}, stride = {})",
                self.particles, self.steps, self.record_stride
            )));
        }
        Ok(())
    }

    /// Step indices whose post-step states are recorded.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..self.steps).step_by(self.record_stride).collect();
        if *steps.last().unwrap() != self.steps - 1 {
            steps.push(self.steps - 1);
        }
        steps
    }
}

pub fn midpoint(step: usize, steps: usize) -> f64 {
    (step as f64 + 0.5) / steps as f64
}

/// A time-discretized drift field.
pub trait DriftField: Sync {
    type Scratch: Send;
    fn dim(&self) -> usize;
    fn scratch(&self) -> Self::Scratch;
    fn drift(&self, step: usize, x: &[f64], scratch: &mut Self::Scratch, out: &mut [f64]);
}

/// `u* = b⁻ ŷ − a⁻ x` with one cached posterior operator per step.
pub struct OptimalDrift<'a> {
    gm: &'a GaussianMixture,
    operators: Vec<PosteriorOperator<'a>>,
}

impl<'a> OptimalDrift<'a> {
    pub fn new(gm: &'a GaussianMixture, schedule: &Schedule, steps: usize) -> Result<Self> {
        let operators = (0..steps)
            .map(|n| gm.posterior_operator(&schedule.coeffs(midpoint(n, steps))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gm, operators })
    }

    /// Operators at arbitrary times (one per entry of `times`).
    pub fn at_times(gm: &'a GaussianMixture, schedule: &Schedule, times: &[f64]) -> Result<Self> {
        let operators = times
            .iter()
            .map(|&t| gm.posterior_operator(&schedule.coeffs(t)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gm, operators })
    }

    pub fn operator(&self, index: usize) -> &PosteriorOperator<'a> {
        &self.operators[index]
    }

    pub fn coeffs(&self, index: usize) -> &GreensCoeffs {
        self.operators[index].coeffs()
    }
}

impl DriftField for OptimalDrift<'_> {
    type Scratch = PosteriorScratch;

    fn dim(&self) -> usize {
        self.gm.dim()
    }

    fn scratch(&self) -> PosteriorScratch {
        PosteriorScratch::new(self.gm)
    }

    fn drift(&self, step: usize, x: &[f64], scratch: &mut PosteriorScratch, out: &mut [f64]) {
        self.operators[step].drift_into(x, scratch, out);
    }
}

/// `u ≡ 0`: plain Brownian motion.
pub struct ZeroDrift {
    pub dim: usize,
}

impl DriftField for ZeroDrift {
    type Scratch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn scratch(&self) {}

    fn drift(&self, _: usize, _: &[f64], _: &mut (), out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Optimal drift `u*` at a single point.
pub fn drift(gm: &GaussianMixture, coeffs: &GreensCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    let op = gm.posterior_operator(coeffs)?;
    let mut out = vec![0.0; gm.dim()];
    op.drift_into(x, &mut PosteriorScratch::new(gm), &mut out);
    Ok(out)
}

/// Recorded trajectories, stored particle-major: `states[(m·J + j)·d + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    pub particles: usize,
    pub steps: usize,
    pub stride: usize,
    pub seed: u64,
    pub schedule_label: String,
    pub step_indices: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub terminal: Vec<f64>,
}

impl PathEnsemble {
    pub fn snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, particle: usize, snapshot: usize) -> &[f64] {
        let start = (particle * self.snapshots() + snapshot) * self.dim;
        &self.states[start..start + self.dim]
    }

    pub fn terminal_state(&self, particle: usize) -> &[f64] {
        &self.terminal[particle * self.dim..(particle + 1) * self.dim]
    }

    /// All particles at one snapshot, `M × d`.
    pub fn snapshot(&self, snapshot: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.particles * self.dim);
        for m in 0..self.particles {
            out.extend_from_slice(self.state(m, snapshot));
        }
        out
    }

    /// Step width `1/T`.
    pub fn step_width(&self) -> f64 {
        1.0 / self.steps as f64
    }

    const MAGIC: &'static [u8; 4] = b"HPID";
    const VERSION: u32 = 1;

    /// Little-endian layout: magic `HPID`, u32 version, u32 d, u64 M, u64 T,
    /// u64 stride, u64 seed, u64 J, J × f64 times, `M·J·d` f64 states
    /// (particle-major), `M·d` f64 terminal states.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in [self.particles, self.steps, self.stride] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.snapshots() as u64).to_le_bytes())?;
        for v in self.times.iter().chain(&self.states).chain(&self.terminal) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        let bad = |what: &str| Error::Config(format!("not an ensemble file: {what}"));
        if &magic != Self::MAGIC {
            return Err(bad("magic"));
        }
        let mut u32b = [0u8; 4];
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u32b)?;
        if u32::from_le_bytes(u32b) != Self::VERSION {
            return Err(bad("version"));
        }
        r.read_exact(&mut u32b)?;
        let dim = u32::from_le_bytes(u32b) as usize;
        let mut next = |r: &mut BufReader<File>| -> Result<u64> {
            r.read_exact(&mut u64b)?;
            Ok(u64::from_le_bytes(u64b))
        };
        let particles = next(&mut r)? as usize;
        let steps = next(&mut r)? as usize;
        let stride = next(&mut r)? as usize;
        let seed = next(&mut r)?;
        let snaps = next(&mut r)? as usize;
        let floats = |n: usize, r: &mut BufReader<File>| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            let mut b = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut b)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let times = floats(snaps, &mut r)?;
        let states = floats(particles * snaps * dim, &mut r)?;
        let terminal = floats(particles * dim, &mut r)?;
        let step_indices = times
            .iter()
            .map(|t| (t * steps as f64 - 0.5).round() as usize)
            .collect();
        Ok(Self {
            dim,
            particles,
            steps,
            stride,
            seed,
            schedule_label: String::new(),
            step_indices,
            times,
            states,
            terminal,
        })
    }

    /// One row per (particle, snapshot): `particle,t,x0,…`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "particle,t,{}", header.join(","))?;
        for m in 0..self.particles {
            for (j, t) in self.times.iter().enumerate() {
                let coords: Vec<String> = self.state(m, j).iter().map(|v| format!("{v}")).collect();
                writeln!(w, "{m},{t},{}", coords.join(","))?;
            }
        }
        Ok(())
    }
}

pub fn simulate(config: &SimConfig) -> Result<PathEnsemble> {
    let gm = models::model(&config.model)?;
    simulate_mixture(&gm, config)
}

pub fn simulate_mixture(gm: &GaussianMixture, config: &SimConfig) -> Result<PathEnsemble> {
    config.validate()?;
    let field = OptimalDrift::new(gm, &config.schedule, config.steps)?;
    simulate_field(&field, config)
}

pub fn simulate_field<F: DriftField>(field: &F, config: &SimConfig) -> Result<PathEnsemble> {
    config.validate()?;
    let d = field.dim();
    let steps = config.steps;
    let recorded = config.recorded_steps();
    let snaps = recorded.len();
    let h = 1.0 / steps as f64;
    let sqrt_h = h.sqrt();
    let mut states = vec![0.0; config.particles * snaps * d];
    let mut terminal = vec![0.0; config.particles * d];

    let failures: Vec<(usize, usize)> = states
        .par_chunks_mut(snaps * d)
        .zip(terminal.par_chunks_mut(d))
        .enumerate()
        .filter_map(|(m, (rows, last))| {
            let mut noise = NoiseStream::new(config.seed, m as u64, d);
            let mut scratch = field.scratch();
            let mut x = vec![0.0; d];
            let mut u = vec![0.0; d];
            let mut z = vec![0.0; d];
            let mut slot = 0;
            for n in 0..steps {
                field.drift(n, &x, &mut scratch, &mut u);
                noise.next_step(&mut z);
                let mut norm2 = 0.0;
                for i in 0..d {
                    x[i] += h * u[i] + sqrt_h * z[i];
                    norm2 += x[i] * x[i];
                }
                if !(norm2.sqrt() <= OVERFLOW_NORM) {
                    return Some((m, n));
                }
                if slot < snaps && recorded[slot] == n {
                    rows[slot * d..(slot + 1) * d].copy_from_slice(&x);
                    slot += 1;
                }
            }
            last.copy_from_slice(&x);
            None
        })
        .collect();
    if let Some(&(particle, step)) = failures.iter().min() {
        return Err(Error::Simulation { particle, step });
    }

    Ok(PathEnsemble {
        dim: d,
        particles: config.particles,
        steps,
        stride: config.record_stride,
        seed: config.seed,
        schedule_label: config.schedule.label().to_string(),
        times: recorded.iter().map(|&n| midpoint(n, steps)).collect(),
        step_indices: recorded,
        states,
        terminal,
    })
}

/// `ŷ(t_j; x_j)` for every recorded state, in the ensemble's layout.
pub fn map_predicted(ensemble: &PathEnsemble, gm: &GaussianMixture, schedule: &Schedule) -> Result<Vec<f64>> {
    let field = OptimalDrift::at_times(gm, schedule, &ensemble.times)?;
    let d = ensemble.dim;
    let snaps = ensemble.snapshots();
    let mut out = vec![0.0; ensemble.states.len()];
    out.par_chunks_mut(snaps * d)
        .zip(ensemble.states.par_chunks(snaps * d))
        .for_each(|(dst, src)| {
            let mut scratch = PosteriorScratch::new(gm);
            for j in 0..snaps {
                field
                    .operator(j)
                    .predicted_state_into(&src[j * d..(j + 1) * d], &mut scratch, &mut dst[j * d..(j + 1) * d]);
            }
        });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recorded_grid_includes_last_step() {
        let cfg = SimConfig::new("regular3x3", Schedule::constant(1.0).unwrap(), 1, 10, 0).with_stride(4);
        assert_eq!(cfg.recorded_steps(), vec![0, 4, 8, 9]);
        assert!(SimConfig::new("regular3x3", Schedule::constant(1.0).unwrap(), 1, 1, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn symmetric_target_has_no_drift_at_origin() {
        let gm = models::regular3x3();
        for t in [0.01, 0.5, 0.9] {
            let c = crate::schedule::coeffs_const(2.0, t).unwrap();
            let u = drift(&gm, &c, &[0.0, 0.0]).unwrap();
            assert!(u.iter().all(|v| v.abs() < 1e-12), "{u:?}");
        }
    }
}
