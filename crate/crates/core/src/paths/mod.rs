//! Sample paths and simulators for the process classes of the toolkit.

mod cantor;
mod io;
mod levy_path;
mod models;
mod sde;
mod time_change;

pub use cantor::{cantor, cantor_divergence, cantor_ternary, CantorRow};
pub use io::{read_binary, read_csv, write_binary, write_csv, BINARY_MAGIC};
pub use levy_path::{simulate_levy, simulate_levy_from, LevySampler};
pub use models::{
    stochastic_exponential,
    cogarch_closed_form_variance, gaussian_ou_exact, gaussian_ou_moments, simulate_bns, simulate_cogarch,
    simulate_gou, simulate_stable_like, BnsParams, CogarchParams, StableLikeSampler,
};
pub use sde::{euler_on_driver, simulate_sde_euler, PhiProperties, SdeModel, EXPLOSION_CAP};
pub use time_change::time_change;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::RandomState;

/// Uniform dyadic grid on `[0, horizon]` with `2^level` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub horizon: f64,
    pub level: u32,
}

impl GridSpec {
    pub fn new(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be finite and > 0, got {horizon}")));
        }
        if level == 0 || level > 30 {
            return Err(invalid(format!("level must lie in 1..=30, got {level}")));
        }
        Ok(Self { horizon, level })
    }

    pub fn steps(&self) -> usize {
        1usize << self.level
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|i| self.time(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub jump: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Complete,
    /// Norm exceeded the cap after `time`; the path stops at the last finite point.
    Exploded { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub scheme: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<Vec<JumpEvent>>,
    pub status: PathStatus,
}

impl SamplePath {
    /// Validated path with status `Complete`.
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, scheme: impl Into<String>, seed: u64) -> Result<Self> {
        let p = Self {
            times,
            values,
            scheme: scheme.into(),
            seed,
            jumps: None,
            status: PathStatus::Complete,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(invalid("times and values must be nonempty and of equal length"));
        }
        if self.times[0] != 0.0 {
            return Err(invalid("times must start at 0"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times must be strictly increasing"));
        }
        let d = self.values[0].len();
        if self.values.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
            return Err(invalid("values must be finite points of a common dimension"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().map_or(&[], Vec::as_slice)
    }

    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    /// Every `stride`-th point (the coarser dyadic grid for `stride = 2^m`).
    pub fn subsample(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        Self {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            values: idx.iter().map(|&i| self.values[i].clone()).collect(),
            scheme: self.scheme.clone(),
            seed: self.seed,
            jumps: self.jumps.clone(),
            status: self.status,
        }
    }

    /// Sum of recorded jumps with times in `(a, b]`.
    pub(crate) fn jumps_in(&self, a: f64, b: f64) -> impl Iterator<Item = &JumpEvent> {
        self.jumps
            .iter()
            .flatten()
            .filter(move |j| j.time > a && j.time <= b)
    }
}

/// A family of path laws indexed by the start point.
pub trait PathSampler: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    /// Path started at `x0`; `mirror` flips the sign of the symmetric noise
    /// (antithetic partner).
    fn sample_from(&self, x0: &[f64], grid: &GridSpec, rng: &mut RandomState, mirror: bool) -> Result<SamplePath>;

    /// Whether `mirror = true` yields a path with the same law.
    fn supports_mirror(&self) -> bool {
        false
    }
}

/// The process that never moves.
#[derive(Debug, Clone)]
pub struct ConstantSampler {
    pub dim: usize,
}

impl PathSampler for ConstantSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> String {
        "constant".into()
    }

    fn sample_from(&self, x0: &[f64], grid: &GridSpec, rng: &mut RandomState, _mirror: bool) -> Result<SamplePath> {
        SamplePath::new(grid.times(), vec![x0.to_vec(); grid.steps() + 1], "constant", rng.seed())
    }

    fn supports_mirror(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = GridSpec::new(2.0, 3).unwrap();
        assert_eq!(g.steps(), 8);
        assert_eq!(g.times()[8], 2.0);
        assert!(GridSpec::new(0.0, 3).is_err());
        assert!(GridSpec::new(1.0, 0).is_err());
    }

    #[test]
    fn path_validation() {
        assert!(SamplePath::new(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]], "x", 0).is_ok());
        assert!(SamplePath::new(vec![0.0, 0.0], vec![vec![0.0], vec![1.0]], "x", 0).is_err());
        assert!(SamplePath::new(vec![0.0, 1.0], vec![vec![0.0]], "x", 0).is_err());
        assert!(SamplePath::new(vec![0.0, 1.0], vec![vec![0.0], vec![f64::NAN]], "x", 0).is_err());
        assert!(SamplePath::new(vec![0.5, 1.0], vec![vec![0.0], vec![1.0]], "x", 0).is_err());
    }

    #[test]
    fn subsample_keeps_dyadic_points() {
        let g = GridSpec::new(1.0, 3).unwrap();
        let vals: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let p = SamplePath::new(g.times(), vals, "x", 0).unwrap().subsample(4);
        assert_eq!(p.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.coordinate(0), vec![0.0, 4.0, 8.0]);
    }
}
