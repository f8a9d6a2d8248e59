//! `D(x) = int (1 - e^{-|y|^lambda}) N(x, dy)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::{E, PI};

use super::state::StateTriplet;
use crate::error::{invalid, Result};
use crate::levy::{stable_density_constant, JumpDist, JumpSpec};
use crate::quad::integrate_pieces;

/// Lower bounds above this declare divergence.
pub const DIVERGENCE_CAP: f64 = 1e6;
const TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DResult {
    /// `+inf` when divergent.
    #[serde(with = "crate::util::lossless_f64")]
    pub value: f64,
    pub verdict: Verdict,
    /// Finite lower bound of the divergent integral, when divergent.
    pub lower_bound: Option<f64>,
}

impl DResult {
    fn finite(value: f64) -> Self {
        Self {
            value,
            verdict: Verdict::Converges,
            lower_bound: None,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("lambda must lie in (0, 2], got {lambda}")))
    }
}

/// `D(x)` for the jump kernel of `triplet` at `x`.
pub fn d_integral(triplet: &StateTriplet, x: &[f64], lambda: f64) -> Result<DResult> {
    check_lambda(lambda)?;
    let t = triplet.at(x)?;
    if lambda < 2.0 && t.has_gaussian() {
        return Err(invalid("a Gaussian part at x requires lambda = 2"));
    }
    d_integral_jumps(&t.jumps, lambda)
}

/// `int (1 - e^{-|y|^lambda}) nu(dy)` for a built-in jump measure.
pub fn d_integral_jumps(jumps: &JumpSpec, lambda: f64) -> Result<DResult> {
    check_lambda(lambda)?;
    Ok(match jumps {
        JumpSpec::None => DResult::finite(0.0),
        JumpSpec::CompoundPoisson { rate, jump } => DResult::finite(rate * expected_kernel(jump, lambda)),
        JumpSpec::FiniteAtomic { atoms } => {
            DResult::finite(atoms.iter().map(|a| a.intensity * kernel(norm(&a.jump), lambda)).sum())
        }
        JumpSpec::SymmetricStable { alpha, scale, .. } => stable_d(*alpha, *scale, lambda),
        JumpSpec::GammaSubordinator { shape, rate, .. } => DResult::finite(gamma_d(*shape, *rate, lambda)),
        JumpSpec::Sum { parts } => {
            let mut value = 0.0;
            let mut lower = 0.0;
            let mut diverges = false;
            for p in parts {
                let r = d_integral_jumps(p, lambda)?;
                value += r.value;
                lower += r.lower_bound.unwrap_or(r.value);
                diverges |= r.verdict == Verdict::Diverges;
            }
            if diverges {
                DResult {
                    value: f64::INFINITY,
                    verdict: Verdict::Diverges,
                    lower_bound: Some(lower),
                }
            } else {
                DResult::finite(value)
            }
        }
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn kernel(r: f64, lambda: f64) -> f64 {
    -(-r.powf(lambda)).exp_m1()
}

fn expected_kernel(jump: &JumpDist, lambda: f64) -> f64 {
    match jump {
        JumpDist::Dirac { jump } => kernel(norm(jump), lambda),
        JumpDist::Normal { mean, std, .. } => {
            if *std == 0.0 {
                return kernel(mean.abs(), lambda);
            }
            let pdf = |y: f64| (-0.5 * ((y - mean) / std).powi(2)).exp() / (std * (2.0 * PI).sqrt());
            let (lo, hi) = (mean - 12.0 * std, mean + 12.0 * std);
            let mut pts = vec![lo, hi];
            if lo < 0.0 && hi > 0.0 {
                pts.insert(1, 0.0);
            }
            integrate_pieces(&|y| pdf(y) * kernel(y.abs(), lambda), &pts, TOL)
        }
        JumpDist::Exponential { rate, .. } => {
            let f = |y: f64| rate * (-rate * y).exp() * kernel(y, lambda);
            let hi = 1.0 + 60.0 / rate;
            integrate_pieces(&f, &[0.0, 1.0_f64.min(hi), hi], TOL)
        }
    }
}

/// Split at |y| = 1: alternating series inside, incomplete gamma outside.
fn stable_d(alpha: f64, scale: f64, lambda: f64) -> DResult {
    let c = 2.0 * scale * stable_density_constant(alpha);
    if lambda <= alpha {
        // 1 - e^{-u} >= (1 - 1/e) u on [0, 1]
        let k = c * (1.0 - 1.0 / E);
        let mut eps: f64 = 1.0;
        let mut bound = 0.0;
        while eps > 1e-300 {
            eps *= 1e-3;
            bound = if lambda == alpha {
                k * (1.0 / eps).ln()
            } else {
                k * (eps.powf(lambda - alpha) - 1.0) / (alpha - lambda)
            };
            if bound > DIVERGENCE_CAP {
                break;
            }
        }
        return DResult {
            value: f64::INFINITY,
            verdict: Verdict::Diverges,
            lower_bound: Some(bound),
        };
    }
    let mut inside = 0.0;
    let mut fact = 1.0;
    for k in 1..200 {
        fact *= k as f64;
        let term = 1.0 / (fact * (lambda * k as f64 - alpha));
        inside += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * inside.abs() {
            break;
        }
    }
    let s = -alpha / lambda;
    // Gamma(s, 1) for s in (-1, 0) from Gamma(s + 1, 1) = s Gamma(s, 1) + e^{-1}
    let upper = (gamma(s + 1.0) * gamma_ur(s + 1.0, 1.0) - (-1.0f64).exp()) / s;
    let outside = 1.0 / alpha - upper / lambda;
    DResult::finite(c * (inside + outside))
}

/// Substitution `y = e^u`.
fn gamma_d(shape: f64, rate: f64, lambda: f64) -> f64 {
    let f = |u: f64| {
        let y = u.exp();
        shape * (-rate * y).exp() * kernel(y, lambda)
    };
    let lo = -45.0 / lambda;
    let hi = (800.0 / rate).ln().max(1.0);
    let n = 64;
    let pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    integrate_pieces(&f, &pts, TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Atom;
    use crate::quad::integrate;

    fn oracle(alpha: f64, lambda: f64) -> f64 {
        // log-scale quadrature, split into unit pieces
        let f = |u: f64| {
            let y = u.exp();
            -(-y.powf(lambda)).exp_m1() * y.powf(-alpha)
        };
        let mut acc = 0.0;
        let mut u = -80.0;
        while u < 60.0 {
            acc += integrate(&f, u, u + 0.5, 1e-16);
            u += 0.5;
        }
        2.0 * stable_density_constant(alpha) * acc
    }

    #[test]
    fn stable_converges_and_matches_oracles() {
        let r = d_integral_jumps(&JumpSpec::symmetric_stable(1.2, 1.0), 1.5).unwrap();
        assert_eq!(r.verdict, Verdict::Converges);
        let q = oracle(1.2, 1.5);
        assert!((r.value - q).abs() / q < 1e-6, "{} vs {q}", r.value);
        let closed = 2.0 * stable_density_constant(1.2) * gamma(1.0 - 1.2 / 1.5) / 1.2;
        assert!((r.value - closed).abs() / closed < 1e-9);
        for (a, l) in [(0.5, 1.0), (0.9, 2.0), (1.7, 1.9), (1.2, 1.25)] {
            let r = d_integral_jumps(&JumpSpec::symmetric_stable(a, 2.0), l).unwrap();
            let closed = 4.0 * stable_density_constant(a) * gamma(1.0 - a / l) / a;
            assert!((r.value - closed).abs() / closed < 1e-9, "{a} {l}");
        }
    }

    #[test]
    fn stable_diverges() {
        for l in [1.0, 1.2, 0.3] {
            let r = d_integral_jumps(&JumpSpec::symmetric_stable(1.2, 1.0), l).unwrap();
            assert_eq!(r.verdict, Verdict::Diverges);
            assert!(r.value.is_infinite());
            assert!(r.lower_bound.unwrap() > 0.0);
        }
        let r = d_integral_jumps(&JumpSpec::symmetric_stable(1.2, 1.0), 1.0).unwrap();
        assert!(r.lower_bound.unwrap() > DIVERGENCE_CAP);
    }

    #[test]
    fn finite_measures() {
        for l in [0.2, 1.0, 2.0] {
            let cp = JumpSpec::CompoundPoisson {
                rate: 3.0,
                jump: JumpDist::Normal { mean: 0.3, std: 1.0, axis: 0 },
            };
            let r = d_integral_jumps(&cp, l).unwrap();
            assert!(r.value <= 3.0 && r.value > 0.0);
            let e = JumpSpec::CompoundPoisson {
                rate: 2.0,
                jump: JumpDist::Exponential { rate: 1.0, axis: 0 },
            };
            assert!(d_integral_jumps(&e, l).unwrap().value <= 2.0);
        }
        let at = JumpSpec::FiniteAtomic {
            atoms: vec![Atom { jump: vec![1.0], intensity: 2.0 }],
        };
        let r = d_integral_jumps(&at, 1.0).unwrap();
        assert!((r.value - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        // E[1 - e^{-J}] = 1/2 for J ~ Exp(1)
        let e = JumpSpec::CompoundPoisson {
            rate: 1.0,
            jump: JumpDist::Exponential { rate: 1.0, axis: 0 },
        };
        assert!((d_integral_jumps(&e, 1.0).unwrap().value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn gamma_subordinator() {
        // int (1 - e^{-y}) e^{-y} / y dy = ln 2
        let g = JumpSpec::GammaSubordinator { shape: 1.0, rate: 1.0, axis: 0 };
        assert!((d_integral_jumps(&g, 1.0).unwrap().value - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bad_lambda() {
        assert!(d_integral_jumps(&JumpSpec::None, 0.0).is_err());
        assert!(d_integral_jumps(&JumpSpec::None, 2.5).is_err());
    }
}
