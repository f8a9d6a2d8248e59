//! The maximal functionals `H(x, R)` and `H(R)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{punctured_unit_ball, unit_ball, BoxDomain, GridConfig};
use super::state::StateSymbol;
use crate::error::{check_finite, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HValue {
    pub value: f64,
    /// Non-finite evaluations skipped by the sup.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HUniform {
    pub value: f64,
    pub unbounded: bool,
    /// Sup over the domain scaled by 1, 2, 4, ...
    pub probe: Vec<f64>,
    pub excluded: usize,
}

/// Precomputed ball grids reused across evaluations.
pub(crate) struct BallGrids {
    y: Vec<Vec<f64>>,
    eps: Vec<Vec<f64>>,
}

impl BallGrids {
    pub(crate) fn new(d: usize, cfg: &GridConfig) -> Self {
        Self {
            y: unit_ball(d, cfg.directions, cfg.ball_radii),
            eps: punctured_unit_ball(d, cfg.directions, cfg.radii),
        }
    }
}

pub(crate) fn h_local_with(sym: &StateSymbol, x: &[f64], r: f64, g: &BallGrids) -> HValue {
    let mut best = 0.0f64;
    let mut excluded = 0;
    let mut y = vec![0.0; x.len()];
    let mut xi = vec![0.0; x.len()];
    for u in &g.y {
        for ((yi, xi0), ui) in y.iter_mut().zip(x).zip(u) {
            *yi = xi0 + 2.0 * r * ui;
        }
        for e in &g.eps {
            for (z, ei) in xi.iter_mut().zip(e) {
                *z = ei / r;
            }
            let v = sym.eval_unchecked(&y, &xi).norm();
            if v.is_finite() {
                best = best.max(v);
            } else {
                excluded += 1;
            }
        }
    }
    if excluded > 0 {
        log::warn!("H({x:?}, {r}): {excluded} non-finite symbol values excluded");
    }
    HValue { value: best, excluded }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be finite and > 0, got {r}")))
    }
}

/// Grid maximum of `|q(y, eps/R)|` over `|y - x| <= 2R`, `|eps| <= 1`.
pub fn h_local(sym: &StateSymbol, x: &[f64], r: f64, cfg: &GridConfig) -> Result<HValue> {
    check_radius(r)?;
    if x.len() != sym.dim() {
        return Err(Error::DimensionMismatch {
            expected: sym.dim(),
            got: x.len(),
        });
    }
    check_finite("x", x)?;
    Ok(h_local_with(sym, x, r, &BallGrids::new(sym.dim(), cfg)))
}

pub(crate) fn h_sup_over_box(sym: &StateSymbol, r: f64, domain: &BoxDomain, cfg: &GridConfig, g: &BallGrids) -> HValue {
    domain
        .grid(cfg.box_points)
        .par_iter()
        .map(|x| h_local_with(sym, x, r, g))
        .reduce(
            || HValue { value: 0.0, excluded: 0 },
            |a, b| HValue {
                value: a.value.max(b.value),
                excluded: a.excluded + b.excluded,
            },
        )
}

/// `sup_x H(x, R)` over a box grid plus a doubling-box unboundedness probe.
pub fn h_uniform(sym: &StateSymbol, r: f64, domain: &BoxDomain, cfg: &GridConfig) -> Result<HUniform> {
    check_radius(r)?;
    if domain.dim() != sym.dim() {
        return Err(Error::DimensionMismatch {
            expected: sym.dim(),
            got: domain.dim(),
        });
    }
    let g = BallGrids::new(sym.dim(), cfg);
    let mut probe = Vec::new();
    let mut excluded = 0;
    for k in 0..=cfg.doublings {
        let h = h_sup_over_box(sym, r, &domain.scaled(2f64.powi(k as i32)), cfg, &g);
        probe.push(h.value);
        excluded += h.excluded;
    }
    Ok(HUniform {
        value: probe[0],
        unbounded: probe_unbounded(&probe),
        probe,
        excluded,
    })
}

/// Growth by a factor >= 2 across each of the last two doublings.
pub(crate) fn probe_unbounded(probe: &[f64]) -> bool {
    if probe.len() < 3 {
        return false;
    }
    probe[probe.len() - 3..].windows(2).all(|w| w[0] > 0.0 && w[1] >= 2.0 * w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpDist, LevyModel};
    use crate::symbols::state::{sde_symbol, CoefficientField};
    use num_complex::Complex64;

    fn gbm() -> StateSymbol {
        sde_symbol(&LevyModel::brownian(1.0), CoefficientField::scalar_linear(), 1).unwrap()
    }

    #[test]
    fn gbm_local_value() {
        let h = h_local(&gbm(), &[1.0], 0.5, &GridConfig::default()).unwrap();
        assert!((h.value - 8.0).abs() < 1e-12, "{}", h.value);
    }

    #[test]
    fn zero_symbol() {
        let s = StateSymbol::closed_form("zero", 1, |_, _| Complex64::new(0.0, 0.0));
        for r in [0.01, 1.0, 10.0] {
            assert_eq!(h_local(&s, &[3.0], r, &GridConfig::default()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn constant_stable_like() {
        let s = StateSymbol::stable_like("a04", |_| 0.4);
        let h = h_local(&s, &[0.7], 0.1, &GridConfig::default()).unwrap();
        assert!((h.value - 0.1f64.powf(-0.8)).abs() < 1e-9);
    }

    #[test]
    fn uniform_stable_like_and_gbm_flag() {
        let s = StateSymbol::stable_like("sl", |x| 0.3 + 0.2 * x.sin().powi(2));
        let dom = BoxDomain::cube(1, 2.0);
        let h = h_uniform(&s, 0.01, &dom, &GridConfig::default()).unwrap();
        assert!((h.value - 100.0).abs() < 0.1, "{}", h.value);
        assert!(!h.unbounded);
        let g = h_uniform(&gbm(), 0.1, &BoxDomain::cube(1, 1.0), &GridConfig::default()).unwrap();
        assert!(g.unbounded, "{:?}", g.probe);
    }

    #[test]
    fn bounded_driver_stays_below_sup_psi() {
        let cp = LevyModel::compound_poisson(2.0, JumpDist::Dirac { jump: vec![1.0] }).unwrap();
        let phi = CoefficientField::new("sin", 1, 1, |x| vec![vec![x[0].sin()]]);
        let s = sde_symbol(&cp, phi, 1).unwrap();
        for r in [1.0, 0.1, 0.001] {
            let h = h_uniform(&s, r, &BoxDomain::cube(1, 3.0), &GridConfig::default()).unwrap();
            assert!(h.value <= 4.0 + 1e-12);
            assert!(!h.unbounded);
        }
    }

    #[test]
    fn probe_rule() {
        assert!(probe_unbounded(&[1.0, 4.0, 16.0, 64.0]));
        assert!(!probe_unbounded(&[1.0, 1.0, 1.0, 1.0]));
        assert!(!probe_unbounded(&[0.0, 0.0, 0.0]));
    }
}
