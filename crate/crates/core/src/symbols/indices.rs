//! Growth-index extraction and the generalized indices built on it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::{h_local_with, h_sup_over_box, probe_unbounded, BallGrids};
use super::grid::{unit_ball, unit_directions, BoxDomain, GridConfig};
use super::state::StateSymbol;
use crate::error::{check_finite, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthMode {
    /// `v(s)` as `s -> 0+`; index is the exponent of `s^{-beta}`.
    AtZero,
    /// `v(s)` as `s -> infinity`; index is the exponent of `s^{beta}`.
    AtInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    #[serde(with = "crate::util::lossless_f64")]
    pub value: f64,
    /// `(scale, value)` pairs fed to the fit.
    pub grid: Vec<(f64, f64)>,
    /// Unclamped power coefficient.
    pub slope: f64,
    /// Coefficient of the `log log` correction (0 for the plain fit).
    pub log_coef: f64,
    /// Residuals of the tail fit in log space.
    pub residuals: Vec<f64>,
    pub residual_rms: f64,
    pub unbounded: bool,
}

impl IndexEstimate {
    fn constant(value: f64, grid: Vec<(f64, f64)>, unbounded: bool) -> Self {
        Self {
            value,
            grid,
            slope: value,
            log_coef: 0.0,
            residuals: Vec::new(),
            residual_rms: 0.0,
            unbounded,
        }
    }

    pub fn unbounded(grid: Vec<(f64, f64)>) -> Self {
        Self::constant(f64::INFINITY, grid, true)
    }
}

/// Tail least-squares exponent of `v` against the scale.
///
/// Fits `log v = c + beta L + gamma log L` with `L = -log s` (at zero) or
/// `L = log s` (at infinity) over the tail half of the samples; the `log L`
/// term absorbs logarithmic factors with `gamma >= 0`. A negative `gamma`, a
/// tail with fewer than four positive values or `L <= 1` on the tail give the
/// plain slope instead.
pub fn index_from_growth(samples: &[(f64, f64)], mode: GrowthMode) -> Result<IndexEstimate> {
    if samples.len() < 4 {
        return Err(invalid(format!("need >= 4 samples, got {}", samples.len())));
    }
    for &(s, v) in samples {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("scales must be finite and > 0, got {s}")));
        }
        if v.is_nan() || v < 0.0 {
            return Err(invalid(format!("values must be >= 0, got {v}")));
        }
    }
    let grid = samples.to_vec();
    if samples.iter().any(|(_, v)| v.is_infinite()) {
        return Ok(IndexEstimate::unbounded(grid));
    }
    if samples.iter().all(|(_, v)| *v == 0.0) {
        return Ok(IndexEstimate::constant(0.0, grid, false));
    }
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(s, v)| {
            let l = match mode {
                GrowthMode::AtZero => -s.ln(),
                GrowthMode::AtInfinity => s.ln(),
            };
            (l, v)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tail: Vec<(f64, f64)> = pts[pts.len() / 2..]
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(l, v)| (l, v.ln()))
        .collect();
    if tail.len() < 2 {
        return Ok(IndexEstimate::constant(0.0, grid, false));
    }
    let mut with_log = tail.len() >= 4 && tail.iter().all(|(l, _)| *l > 1.0);
    let (mut a, mut coef) = tail_fit(&tail, with_log)?;
    if with_log && coef[2] < 0.0 {
        // only growth-inflating log factors are corrected
        with_log = false;
        (a, coef) = tail_fit(&tail, false)?;
    }
    let b = DVector::from_iterator(tail.len(), tail.iter().map(|(_, y)| *y));
    let residuals: Vec<f64> = (&b - &a * &coef).iter().copied().collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let slope = coef[1];
    Ok(IndexEstimate {
        value: slope.max(0.0),
        grid,
        slope,
        log_coef: if with_log { coef[2] } else { 0.0 },
        residuals,
        residual_rms,
        unbounded: false,
    })
}

fn tail_fit(tail: &[(f64, f64)], with_log: bool) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let ncol = if with_log { 3 } else { 2 };
    let a = DMatrix::from_fn(tail.len(), ncol, |i, j| match j {
        0 => 1.0,
        1 => tail[i].0,
        _ => tail[i].0.ln(),
    });
    let b = DVector::from_iterator(tail.len(), tail.iter().map(|(_, y)| *y));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    Ok((a, coef))
}

/// Scales `2^{-4}, ..., 2^{-16}`.
pub fn r_grid() -> Vec<f64> {
    (4..=16).map(|k| 2f64.powi(-k)).collect()
}

fn check_point(sym: &StateSymbol, x: &[f64]) -> Result<()> {
    if x.len() != sym.dim() {
        return Err(Error::DimensionMismatch {
            expected: sym.dim(),
            got: x.len(),
        });
    }
    check_finite("x", x)
}

fn check_domain(sym: &StateSymbol, domain: &BoxDomain) -> Result<()> {
    if domain.dim() != sym.dim() {
        return Err(Error::DimensionMismatch {
            expected: sym.dim(),
            got: domain.dim(),
        });
    }
    Ok(())
}

/// Uniform index at infinity from `H(R)` on `R = 2^{-4}..2^{-16}`.
pub fn index_beta_inf_unif(sym: &StateSymbol, domain: &BoxDomain, cfg: &GridConfig) -> Result<IndexEstimate> {
    check_domain(sym, domain)?;
    let g = BallGrids::new(sym.dim(), cfg);
    let mut samples = Vec::new();
    let mut flagged = 0;
    for r in r_grid() {
        let probe: Vec<f64> = (0..=cfg.doublings)
            .map(|k| h_sup_over_box(sym, r, &domain.scaled(2f64.powi(k as i32)), cfg, &g).value)
            .collect();
        if probe_unbounded(&probe) {
            flagged += 1;
        }
        samples.push((r, probe[0]));
    }
    if flagged == samples.len() {
        return Ok(IndexEstimate::unbounded(samples));
    }
    index_from_growth(&samples, GrowthMode::AtZero)
}

fn beta_inf_x_with(sym: &StateSymbol, x: &[f64], g: &BallGrids) -> Result<IndexEstimate> {
    let samples: Vec<(f64, f64)> = r_grid().into_iter().map(|r| (r, h_local_with(sym, x, r, g).value)).collect();
    index_from_growth(&samples, GrowthMode::AtZero)
}

/// Pointwise index at infinity from `H(x, R)`.
pub fn index_beta_inf_x(sym: &StateSymbol, x: &[f64], cfg: &GridConfig) -> Result<IndexEstimate> {
    check_point(sym, x)?;
    beta_inf_x_with(sym, x, &BallGrids::new(sym.dim(), cfg))
}

/// Maximum over the domain grid of the pointwise index at infinity.
pub fn index_beta_inf_unif1(sym: &StateSymbol, domain: &BoxDomain, cfg: &GridConfig) -> Result<IndexEstimate> {
    check_domain(sym, domain)?;
    let g = BallGrids::new(sym.dim(), cfg);
    let all: Vec<IndexEstimate> = domain
        .grid(cfg.box_points)
        .par_iter()
        .map(|x| beta_inf_x_with(sym, x, &g))
        .collect::<Result<_>>()?;
    // first maximiser, so the choice does not depend on scheduling
    let mut best = all[0].clone();
    for e in all.into_iter().skip(1) {
        if e.value > best.value {
            best = e;
        }
    }
    Ok(best)
}

const SPOT_SUBSTEPS: usize = 8;

fn spot_with(sym: &StateSymbol, y: &[f64], dirs: &[Vec<f64>]) -> Result<IndexEstimate> {
    let mut env = 0.0f64;
    let mut prev = 0.0;
    let mut samples = Vec::new();
    let mut xi = vec![0.0; y.len()];
    for k in 4..=16 {
        let r = 2f64.powi(k);
        for s in 1..=SPOT_SUBSTEPS {
            let rho = prev + (r - prev) * s as f64 / SPOT_SUBSTEPS as f64;
            for u in dirs {
                for (z, c) in xi.iter_mut().zip(u) {
                    *z = c * rho;
                }
                let v = sym.eval_unchecked(y, &xi).re;
                if v.is_finite() {
                    env = env.max(v);
                }
            }
        }
        prev = r;
        samples.push((r, env));
    }
    index_from_growth(&samples, GrowthMode::AtInfinity)
}

/// Spot index at `y`: growth of `sup_{|eta| <= r} Re q(y, eta)` on `r = 2^4..2^16`.
pub fn index_spot(sym: &StateSymbol, y: &[f64], cfg: &GridConfig) -> Result<IndexEstimate> {
    check_point(sym, y)?;
    spot_with(sym, y, &unit_directions(sym.dim(), cfg.directions))
}

/// Largest ball radius and number of halvings used by [`index_beta_loc`].
pub const LOC_R0: f64 = 0.5;
pub const LOC_LEVELS: i32 = 6;

/// Local index at `x`: for `R_i = R0 2^{-i}` the infimum of spot indices over
/// the grid points in `B_{R_i}(x)`; `grid` holds the sequence `(R_i, inf)`,
/// `value` its last entry.
pub fn index_beta_loc(sym: &StateSymbol, x: &[f64], cfg: &GridConfig) -> Result<IndexEstimate> {
    check_point(sym, x)?;
    let d = sym.dim();
    let dirs = unit_directions(d, cfg.directions);
    let shape = unit_ball(d, cfg.directions, cfg.ball_radii);
    let radii: Vec<f64> = (0..LOC_LEVELS).map(|i| LOC_R0 * 2f64.powi(-i)).collect();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for r in &radii {
        for u in &shape {
            pts.push(x.iter().zip(u).map(|(a, b)| a + r * b).collect());
        }
    }
    let spots: Vec<f64> = pts
        .par_iter()
        .map(|y| spot_with(sym, y, &dirs).map(|e| e.value))
        .collect::<Result<_>>()?;
    let dist = |p: &[f64]| p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let seq: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let inf = pts
                .iter()
                .zip(&spots)
                .filter(|(p, _)| dist(p) <= r * (1.0 + 1e-12))
                .map(|(_, s)| *s)
                .fold(f64::INFINITY, f64::min);
            (r, inf)
        })
        .collect();
    let value = seq.last().map_or(0.0, |p| p.1);
    Ok(IndexEstimate {
        value,
        slope: value,
        log_coef: 0.0,
        residuals: Vec::new(),
        residual_rms: 0.0,
        unbounded: value.is_infinite(),
        grid: seq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpDist, LevyModel};
    use crate::symbols::state::{sde_symbol, CoefficientField};

    fn gbm() -> StateSymbol {
        sde_symbol(&LevyModel::brownian(1.0), CoefficientField::scalar_linear(), 1).unwrap()
    }

    fn stable_like() -> StateSymbol {
        StateSymbol::stable_like("sl", |x| 0.3 + 0.2 * x.sin().powi(2))
    }

    fn geometric(f: impl Fn(f64) -> f64, lo: i32, hi: i32) -> Vec<(f64, f64)> {
        (lo..=hi).map(|k| 2f64.powi(-k)).map(|s| (s, f(s))).collect()
    }

    #[test]
    fn exact_power_law() {
        let e = index_from_growth(&geometric(|s| s.powf(-1.2), 4, 16), GrowthMode::AtZero).unwrap();
        assert!((e.value - 1.2).abs() < 1e-9);
        let e = index_from_growth(&geometric(|s| 3.0 * s.powf(-0.7), 4, 16), GrowthMode::AtZero).unwrap();
        assert!((e.value - 0.7).abs() < 1e-9);
    }

    #[test]
    fn constant_and_zero() {
        let e = index_from_growth(&geometric(|_| 5.0, 4, 16), GrowthMode::AtZero).unwrap();
        assert!(e.value.abs() < 1e-9);
        let e = index_from_growth(&geometric(|_| 0.0, 4, 16), GrowthMode::AtZero).unwrap();
        assert_eq!(e.value, 0.0);
        let e = index_from_growth(&geometric(|s| s, 4, 16), GrowthMode::AtZero).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.slope < 0.0);
    }

    #[test]
    fn logarithmic_factor() {
        let e = index_from_growth(&geometric(|s| s.powi(-2) * (1.0 / s).ln(), 6, 16), GrowthMode::AtZero).unwrap();
        assert!((e.value - 2.0).abs() < 0.05, "{}", e.value);
    }

    #[test]
    fn infinite_value_and_errors() {
        let mut g = geometric(|s| 1.0 / s, 4, 10);
        g[2].1 = f64::INFINITY;
        let e = index_from_growth(&g, GrowthMode::AtZero).unwrap();
        assert!(e.unbounded && e.value.is_infinite());
        assert!(index_from_growth(&g[..3], GrowthMode::AtZero).is_err());
        assert!(index_from_growth(&[(0.0, 1.0); 5], GrowthMode::AtZero).is_err());
    }

    #[test]
    fn at_infinity_mode() {
        let g: Vec<(f64, f64)> = (4..=16).map(|k| 2f64.powi(k)).map(|r| (r, r.powf(1.5))).collect();
        let e = index_from_growth(&g, GrowthMode::AtInfinity).unwrap();
        assert!((e.value - 1.5).abs() < 1e-9);
    }

    #[test]
    fn uniform_index_stable_like() {
        let e = index_beta_inf_unif(&stable_like(), &BoxDomain::cube(1, 2.0), &GridConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{}", e.value);
    }

    #[test]
    fn uniform_index_stable_levy() {
        let s = StateSymbol::from_levy(&LevyModel::symmetric_stable(1.2, 1.0).unwrap());
        let e = index_beta_inf_unif(&s, &BoxDomain::cube(1, 1.0), &GridConfig::default()).unwrap();
        assert!((e.value - 1.2).abs() < 0.05, "{}", e.value);
    }

    #[test]
    fn uniform_index_gbm_unbounded() {
        let e = index_beta_inf_unif(&gbm(), &BoxDomain::cube(1, 1.0), &GridConfig::default()).unwrap();
        assert!(e.unbounded && e.value.is_infinite());
        let e1 = index_beta_inf_unif1(&gbm(), &BoxDomain::cube(1, 1.0), &GridConfig::default()).unwrap();
        assert!((e1.value - 2.0).abs() < 0.05, "{}", e1.value);
    }

    #[test]
    fn spot_indices() {
        let cfg = GridConfig::default();
        assert!((index_spot(&gbm(), &[1.0], &cfg).unwrap().value - 2.0).abs() < 0.05);
        assert!(index_spot(&gbm(), &[0.0], &cfg).unwrap().value.abs() < 0.05);
        let y = (0.15f64 / 0.2).sqrt().asin();
        let e = index_spot(&stable_like(), &[y], &cfg).unwrap();
        assert!((e.value - 0.9).abs() < 0.05, "{}", e.value);
        let cp = LevyModel::compound_poisson(3.0, JumpDist::Dirac { jump: vec![1.0] }).unwrap();
        assert!(index_spot(&StateSymbol::from_levy(&cp), &[0.0], &cfg).unwrap().value < 0.05);
    }

    #[test]
    fn local_indices() {
        let cfg = GridConfig::default();
        assert!((index_beta_loc(&gbm(), &[1.0], &cfg).unwrap().value - 2.0).abs() < 0.05);
        assert!(index_beta_loc(&gbm(), &[0.0], &cfg).unwrap().value.abs() < 0.05);
        let e = index_beta_loc(&stable_like(), &[0.0], &cfg).unwrap();
        assert!((e.value - 0.6).abs() < 0.05, "{}", e.value);
        for w in e.grid.windows(2) {
            assert!(w[1].1 >= w[0].1 - 0.02);
        }
        let s = StateSymbol::from_levy(&LevyModel::symmetric_stable(0.9, 1.0).unwrap());
        assert!((index_beta_loc(&s, &[4.0], &cfg).unwrap().value - 0.9).abs() < 1e-6);
    }
}
