//! Monte Carlo estimators built on path samplers: the stopped symbol, the
//! `h(t, y)` functional and the tail probability `alpha(h, a)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{GridSpec, PathSampler, SamplePath};
use crate::rng::RandomState;
use crate::util::{lossless_f64, mean_and_se};

/// Replication settings shared by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    /// The simulation grid over `[0, t]` has `2^level` steps.
    pub level: u32,
    pub seed: u64,
    /// Pair every replica with its mirrored partner (requires symmetric noise).
    #[serde(default)]
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n: usize, level: u32, seed: u64) -> Self {
        Self { n, level, seed, antithetic: false }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub se_re: f64,
    pub se_im: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealEstimate {
    #[serde(with = "lossless_f64")]
    pub value: f64,
    #[serde(with = "lossless_f64")]
    pub se: f64,
    pub n: usize,
}

/// Independent draws of `f(path)`, one per replica (or per antithetic pair,
/// averaged). Seeds depend only on `(cfg.seed, label, index)`.
fn replicate<T, F>(sampler: &dyn PathSampler, x0: &[f64], grid: &GridSpec, cfg: &McConfig, label: &str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SamplePath, &SamplePath) -> T + Sync,
{
    if cfg.antithetic && !sampler.supports_mirror() {
        return Err(invalid(format!("sampler {} has no antithetic partner", sampler.label())));
    }
    if x0.len() != sampler.dim() {
        return Err(Error::DimensionMismatch { expected: sampler.dim(), got: x0.len() });
    }
    let draws = if cfg.antithetic { cfg.n.div_ceil(2) } else { cfg.n };
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let rng = RandomState::derive(cfg.seed, label, i as u64);
            let a = sampler.sample_from(x0, grid, &mut rng.clone(), false)?;
            if cfg.antithetic {
                let b = sampler.sample_from(x0, grid, &mut rng.clone(), true)?;
                Ok(f(&a, &b))
            } else {
                Ok(f(&a, &a))
            }
        })
        .collect()
}

/// Value at the first grid time the path leaves the closed ball `B_R(x)`,
/// or the terminal value if it never does.
pub fn stopped_value<'a>(path: &'a SamplePath, x: &[f64], radius: f64) -> &'a [f64] {
    for v in &path.values {
        let d2: f64 = v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2.sqrt() > radius {
            return v;
        }
    }
    path.last()
}

fn check_common(t: f64, cfg: &McConfig) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be > 0, got {t}")));
    }
    if cfg.n < 2 {
        return Err(invalid("need at least 2 replicas"));
    }
    Ok(())
}

/// `-(E e^{i (X_sigma - x) xi} - 1) / t` with `sigma` the first grid exit from `B_R(x)`
/// before `t`.
pub fn mc_symbol_estimate(
    sampler: &dyn PathSampler,
    x: &[f64],
    xi: &[f64],
    t: f64,
    radius: f64,
    cfg: &McConfig,
) -> Result<ComplexEstimate> {
    check_common(t, cfg)?;
    if !(radius > 0.0) {
        return Err(invalid("stopping radius must be > 0"));
    }
    if xi.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: xi.len() });
    }
    if xi.iter().all(|c| *c == 0.0) {
        return Ok(ComplexEstimate { value: Complex64::new(0.0, 0.0), se_re: 0.0, se_im: 0.0, n: cfg.n });
    }
    let grid = GridSpec::new(t, cfg.level)?;
    let phase = |p: &SamplePath| {
        let v = stopped_value(p, x, radius);
        let s: f64 = v.iter().zip(x).zip(xi).map(|((a, b), c)| (a - b) * c).sum();
        Complex64::new(0.0, s).exp()
    };
    let draws = replicate(sampler, x, &grid, cfg, "mc-symbol", |a, b| 0.5 * (phase(a) + phase(b)))?;
    let re: Vec<f64> = draws.iter().map(|z| -(z.re - 1.0) / t).collect();
    let im: Vec<f64> = draws.iter().map(|z| -z.im / t).collect();
    let (mre, se_re) = mean_and_se(&re);
    let (mim, se_im) = mean_and_se(&im);
    Ok(ComplexEstimate { value: Complex64::new(mre, mim), se_re, se_im, n: cfg.n })
}

/// `(1 - E^y e^{-|X_sigma - y|^lambda}) / t`, which lies in `[0, 1/t]`.
pub fn mc_h_estimate(
    sampler: &dyn PathSampler,
    y: &[f64],
    lambda: f64,
    t: f64,
    radius: f64,
    cfg: &McConfig,
) -> Result<RealEstimate> {
    check_common(t, cfg)?;
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(invalid(format!("lambda must lie in (0, 2], got {lambda}")));
    }
    if !(radius > 0.0) {
        return Err(invalid("stopping radius must be > 0"));
    }
    let grid = GridSpec::new(t, cfg.level)?;
    let kernel = |p: &SamplePath| {
        let v = stopped_value(p, y, radius);
        let d: f64 = v.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        (1.0 - (-d.powf(lambda)).exp()) / t
    };
    let draws = replicate(sampler, y, &grid, cfg, "mc-h", |a, b| 0.5 * (kernel(a) + kernel(b)))?;
    let (value, se) = mean_and_se(&draws);
    Ok(RealEstimate { value, se, n: cfg.n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    #[serde(with = "lossless_f64")]
    pub value: f64,
    #[serde(with = "lossless_f64")]
    pub se: f64,
    pub argmax_x: Vec<f64>,
    #[serde(with = "lossless_f64")]
    pub argmax_t: f64,
    pub n: usize,
}

/// `sup_x sup_{t <= h} P^x(|X_t - x| >= a)` over the start points `xs` and the
/// simulation grid times in `(0, h]`.
pub fn alpha_hr_estimate(sampler: &dyn PathSampler, xs: &[Vec<f64>], h: f64, a: f64, cfg: &McConfig) -> Result<TailEstimate> {
    check_common(h, cfg)?;
    if !(a > 0.0) {
        return Err(invalid("a must be > 0"));
    }
    if xs.is_empty() {
        return Err(invalid("need at least one start point"));
    }
    let grid = GridSpec::new(h, cfg.level)?;
    let steps = grid.steps();
    let plain = McConfig { antithetic: false, ..cfg.clone() };
    let mut best = TailEstimate { value: -1.0, se: 0.0, argmax_x: xs[0].clone(), argmax_t: h, n: cfg.n };
    for x in xs {
        let hits: Vec<Vec<bool>> = replicate(sampler, x, &grid, &plain, "alpha-hr", |p, _| {
            p.values[1..]
                .iter()
                .map(|v| v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= a)
                .collect()
        })?;
        for k in 0..steps {
            let count = hits.iter().filter(|h| h[k]).count();
            let prob = count as f64 / hits.len() as f64;
            if prob > best.value {
                best.value = prob;
                best.se = (prob * (1.0 - prob) / hits.len() as f64).sqrt();
                best.argmax_x = x.clone();
                best.argmax_t = grid.time(k + 1);
            }
        }
    }
    Ok(best)
}
