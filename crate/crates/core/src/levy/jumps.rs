//! Jump parts of a Levy triplet.
//!
//! All exponents use the cut-off `chi = 1{|y| <= 1}` (closed unit ball):
//! `psi_J(xi) = -int (e^{i y.xi} - 1 - i y.xi chi(y)) nu(dy)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;
use std::f64::consts::{PI, SQRT_2};

use super::stable::standard_symmetric_stable;
use crate::error::{invalid, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Jump-size law of a compound Poisson part. Scalar laws act on one `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDist {
    Dirac {
        jump: Vec<f64>,
    },
    Normal {
        mean: f64,
        std: f64,
        #[serde(default)]
        axis: usize,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        axis: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub jump: Vec<f64>,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    #[default]
    None,
    CompoundPoisson {
        rate: f64,
        jump: JumpDist,
    },
    /// Levy density `c |y|^{-1-alpha}` on one axis, exponent `scale |xi|^alpha`.
    SymmetricStable {
        alpha: f64,
        scale: f64,
        #[serde(default)]
        axis: usize,
    },
    /// Levy density `shape y^{-1} e^{-rate y}`, y > 0.
    GammaSubordinator {
        shape: f64,
        rate: f64,
        #[serde(default)]
        axis: usize,
    },
    FiniteAtomic {
        atoms: Vec<Atom>,
    },
    /// Independent superposition; Levy measures add.
    Sum {
        parts: Vec<JumpSpec>,
    },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Constant `c` of the Levy density `c|y|^{-1-alpha}` whose exponent is `|xi|^alpha`.
pub fn stable_density_constant(alpha: f64) -> f64 {
    gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI
}

impl JumpDist {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            JumpDist::Dirac { jump } => {
                if jump.len() != dim {
                    return Err(invalid(format!(
                        "dirac jump has length {}, model dimension is {dim}",
                        jump.len()
                    )));
                }
                if jump.iter().any(|x| !x.is_finite()) || norm(jump) == 0.0 {
                    return Err(invalid("dirac jump must be finite and nonzero"));
                }
            }
            JumpDist::Normal { mean, std, axis } => {
                if *axis >= dim || !mean.is_finite() || !(*std > 0.0 && std.is_finite()) {
                    return Err(invalid("normal jump law needs finite mean, std > 0, axis < dim"));
                }
            }
            JumpDist::Exponential { rate, axis } => {
                if *axis >= dim || !(*rate > 0.0 && rate.is_finite()) {
                    return Err(invalid("exponential jump law needs rate > 0, axis < dim"));
                }
            }
        }
        Ok(())
    }

    pub fn char_fn(&self, xi: &[f64]) -> Complex64 {
        match self {
            JumpDist::Dirac { jump } => (I * dot(jump, xi)).exp(),
            JumpDist::Normal { mean, std, axis } => {
                let x = xi[*axis];
                (Complex64::new(-0.5 * std * std * x * x, mean * x)).exp()
            }
            JumpDist::Exponential { rate, axis } => {
                Complex64::new(*rate, 0.0) / Complex64::new(*rate, -xi[*axis])
            }
        }
    }

    /// `E[J; |J| <= 1]`, written into `out`.
    fn truncated_mean(&self, out: &mut [f64]) {
        match self {
            JumpDist::Dirac { jump } => {
                if norm(jump) <= 1.0 {
                    for (o, j) in out.iter_mut().zip(jump) {
                        *o += j;
                    }
                }
            }
            JumpDist::Normal { mean, std, axis } => {
                let a = (-1.0 - mean) / std;
                let b = (1.0 - mean) / std;
                out[*axis] += mean * (std_normal_cdf(b) - std_normal_cdf(a))
                    + std * (std_normal_pdf(a) - std_normal_pdf(b));
            }
            JumpDist::Exponential { rate, axis } => {
                out[*axis] += (1.0 - (-rate).exp() * (1.0 + rate)) / rate;
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        matches!(self, JumpDist::Normal { mean, .. } if *mean == 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        match self {
            JumpDist::Dirac { jump } => out.copy_from_slice(jump),
            JumpDist::Normal { mean, std, axis } => {
                out[*axis] = Normal::new(*mean, *std).expect("validated").sample(rng);
            }
            JumpDist::Exponential { rate, axis } => {
                out[*axis] = Exp::new(*rate).expect("validated").sample(rng);
            }
        }
        out
    }

    fn embed(&self, offset: usize, dim: usize) -> JumpDist {
        match self {
            JumpDist::Dirac { jump } => {
                let mut v = vec![0.0; dim];
                v[offset..offset + jump.len()].copy_from_slice(jump);
                JumpDist::Dirac { jump: v }
            }
            JumpDist::Normal { mean, std, axis } => JumpDist::Normal {
                mean: *mean,
                std: *std,
                axis: axis + offset,
            },
            JumpDist::Exponential { rate, axis } => JumpDist::Exponential {
                rate: *rate,
                axis: axis + offset,
            },
        }
    }
}

impl JumpSpec {
    pub fn symmetric_stable(alpha: f64, scale: f64) -> Self {
        JumpSpec::SymmetricStable { alpha, scale, axis: 0 }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            JumpSpec::None => Ok(()),
            JumpSpec::CompoundPoisson { rate, jump } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(invalid("compound Poisson rate must be finite and >= 0"));
                }
                jump.validate(dim)
            }
            JumpSpec::SymmetricStable { alpha, scale, axis } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid(format!("stable alpha must lie in (0,2), got {alpha}")));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("stable scale must be > 0, got {scale}")));
                }
                if *axis >= dim {
                    return Err(invalid("stable axis out of range"));
                }
                Ok(())
            }
            JumpSpec::GammaSubordinator { shape, rate, axis } => {
                if !(*shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return Err(invalid("gamma subordinator needs shape > 0 and rate > 0"));
                }
                if *axis >= dim {
                    return Err(invalid("gamma axis out of range"));
                }
                Ok(())
            }
            JumpSpec::FiniteAtomic { atoms } => {
                for a in atoms {
                    if a.jump.len() != dim {
                        return Err(invalid("atom jump length differs from model dimension"));
                    }
                    if !(a.intensity > 0.0 && a.intensity.is_finite()) {
                        return Err(invalid("atom intensities must be > 0"));
                    }
                    if a.jump.iter().any(|x| !x.is_finite()) || norm(&a.jump) == 0.0 {
                        return Err(invalid("atoms must be finite and nonzero (N(x,{0}) = 0)"));
                    }
                }
                Ok(())
            }
            JumpSpec::Sum { parts } => parts.iter().try_for_each(|p| p.validate(dim)),
        }
    }

    /// Jump contribution to the characteristic exponent.
    pub fn exponent(&self, xi: &[f64]) -> Complex64 {
        match self {
            JumpSpec::None => Complex64::new(0.0, 0.0),
            JumpSpec::CompoundPoisson { rate, jump } => {
                let mut m = vec![0.0; xi.len()];
                jump.truncated_mean(&mut m);
                *rate * (1.0 - jump.char_fn(xi)) + I * (*rate * dot(&m, xi))
            }
            JumpSpec::SymmetricStable { alpha, scale, axis } => {
                Complex64::new(scale * xi[*axis].abs().powf(*alpha), 0.0)
            }
            JumpSpec::GammaSubordinator { shape, rate, axis } => {
                let x = xi[*axis];
                let log_term = Complex64::new(1.0, -x / rate).ln();
                *shape * log_term + I * (x * shape * (1.0 - (-rate).exp()) / rate)
            }
            JumpSpec::FiniteAtomic { atoms } => atoms
                .iter()
                .map(|a| {
                    let s = dot(&a.jump, xi);
                    let comp = if norm(&a.jump) <= 1.0 { s } else { 0.0 };
                    a.intensity * (1.0 - (I * s).exp() + I * comp)
                })
                .sum(),
            JumpSpec::Sum { parts } => parts.iter().map(|p| p.exponent(xi)).sum(),
        }
    }

    /// `int y chi(y) nu(dy)`; zero for the symmetric stable part by symmetry.
    pub fn compensator(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_compensator(&mut out);
        out
    }

    fn add_compensator(&self, out: &mut [f64]) {
        match self {
            JumpSpec::None | JumpSpec::SymmetricStable { .. } => {}
            JumpSpec::CompoundPoisson { rate, jump } => {
                let mut m = vec![0.0; out.len()];
                jump.truncated_mean(&mut m);
                for (o, v) in out.iter_mut().zip(m) {
                    *o += rate * v;
                }
            }
            JumpSpec::GammaSubordinator { shape, rate, axis } => {
                out[*axis] += shape * (1.0 - (-rate).exp()) / rate;
            }
            JumpSpec::FiniteAtomic { atoms } => {
                for a in atoms.iter().filter(|a| norm(&a.jump) <= 1.0) {
                    for (o, j) in out.iter_mut().zip(&a.jump) {
                        *o += a.intensity * j;
                    }
                }
            }
            JumpSpec::Sum { parts } => parts.iter().for_each(|p| p.add_compensator(out)),
        }
    }

    /// Classical Blumenthal-Getoor index of the Levy measure.
    pub fn bg_index(&self) -> f64 {
        match self {
            JumpSpec::SymmetricStable { alpha, .. } => *alpha,
            JumpSpec::Sum { parts } => parts.iter().map(JumpSpec::bg_index).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            JumpSpec::None => true,
            JumpSpec::CompoundPoisson { rate, .. } => *rate == 0.0,
            JumpSpec::FiniteAtomic { atoms } => atoms.is_empty(),
            JumpSpec::Sum { parts } => parts.iter().all(JumpSpec::is_none),
            _ => false,
        }
    }

    /// Finitely many jumps on bounded intervals.
    pub fn is_finite_activity(&self) -> bool {
        match self {
            JumpSpec::None | JumpSpec::CompoundPoisson { .. } | JumpSpec::FiniteAtomic { .. } => {
                true
            }
            JumpSpec::Sum { parts } => parts.iter().all(JumpSpec::is_finite_activity),
            _ => false,
        }
    }

    /// Whether the jump part (without compensating drift) is symmetric in law.
    pub fn is_symmetric(&self) -> bool {
        match self {
            JumpSpec::None | JumpSpec::SymmetricStable { .. } => true,
            JumpSpec::CompoundPoisson { rate, jump } => *rate == 0.0 || jump.is_symmetric(),
            JumpSpec::FiniteAtomic { atoms } => atoms.iter().all(|a| {
                let neg: Vec<f64> = a.jump.iter().map(|x| -x).collect();
                atoms.iter().any(|b| b.jump == neg && b.intensity == a.intensity)
            }),
            JumpSpec::GammaSubordinator { .. } => false,
            JumpSpec::Sum { parts } => parts.iter().all(JumpSpec::is_symmetric),
        }
    }

    /// Total intensity of the finite-activity parts.
    pub fn finite_rate(&self) -> f64 {
        match self {
            JumpSpec::CompoundPoisson { rate, .. } => *rate,
            JumpSpec::FiniteAtomic { atoms } => atoms.iter().map(|a| a.intensity).sum(),
            JumpSpec::Sum { parts } => parts.iter().map(JumpSpec::finite_rate).sum(),
            _ => 0.0,
        }
    }

    /// One jump of the finite-activity parts, chosen proportionally to intensity.
    pub fn sample_finite_mark<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        let total = self.finite_rate();
        let mut u = rng.random::<f64>() * total;
        self.pick_mark(dim, &mut u, rng).unwrap_or_else(|| vec![0.0; dim])
    }

    fn pick_mark<R: Rng + ?Sized>(&self, dim: usize, u: &mut f64, rng: &mut R) -> Option<Vec<f64>> {
        match self {
            JumpSpec::CompoundPoisson { rate, jump } => {
                if *u < *rate {
                    Some(jump.sample(dim, rng))
                } else {
                    *u -= rate;
                    None
                }
            }
            JumpSpec::FiniteAtomic { atoms } => {
                for a in atoms {
                    if *u < a.intensity {
                        return Some(a.jump.clone());
                    }
                    *u -= a.intensity;
                }
                None
            }
            JumpSpec::Sum { parts } => parts.iter().find_map(|p| p.pick_mark(dim, u, rng)),
            _ => None,
        }
    }

    /// Raw jump increment over `dt` (no compensating drift) of every part.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, out: &mut [f64], rng: &mut R) {
        self.sample_parts(dt, out, rng, true);
    }

    /// Raw increment of the infinite-activity parts only.
    pub fn sample_infinite_activity<R: Rng + ?Sized>(&self, dt: f64, out: &mut [f64], rng: &mut R) {
        self.sample_parts(dt, out, rng, false);
    }

    fn sample_parts<R: Rng + ?Sized>(&self, dt: f64, out: &mut [f64], rng: &mut R, finite: bool) {
        match self {
            JumpSpec::None => {}
            JumpSpec::CompoundPoisson { rate, jump } => {
                if finite && *rate > 0.0 {
                    let n = poisson_count(rate * dt, rng);
                    for _ in 0..n {
                        let j = jump.sample(out.len(), rng);
                        out.iter_mut().zip(j).for_each(|(o, v)| *o += v);
                    }
                }
            }
            JumpSpec::FiniteAtomic { atoms } => {
                if finite {
                    for a in atoms {
                        let n = poisson_count(a.intensity * dt, rng);
                        for (o, j) in out.iter_mut().zip(&a.jump) {
                            *o += n as f64 * j;
                        }
                    }
                }
            }
            JumpSpec::SymmetricStable { alpha, scale, axis } => {
                let s = standard_symmetric_stable(*alpha, rng);
                out[*axis] += (scale * dt).powf(1.0 / alpha) * s;
            }
            JumpSpec::GammaSubordinator { shape, rate, axis } => {
                let g = Gamma::new(shape * dt, 1.0 / rate).expect("validated");
                out[*axis] += g.sample(rng);
            }
            JumpSpec::Sum { parts } => {
                parts.iter().for_each(|p| p.sample_parts(dt, out, rng, finite))
            }
        }
    }

    /// Same measure on coordinates `offset..offset+own_dim` of a `dim`-dimensional space.
    pub fn embed(&self, offset: usize, dim: usize) -> JumpSpec {
        match self {
            JumpSpec::None => JumpSpec::None,
            JumpSpec::CompoundPoisson { rate, jump } => JumpSpec::CompoundPoisson {
                rate: *rate,
                jump: jump.embed(offset, dim),
            },
            JumpSpec::SymmetricStable { alpha, scale, axis } => JumpSpec::SymmetricStable {
                alpha: *alpha,
                scale: *scale,
                axis: axis + offset,
            },
            JumpSpec::GammaSubordinator { shape, rate, axis } => JumpSpec::GammaSubordinator {
                shape: *shape,
                rate: *rate,
                axis: axis + offset,
            },
            JumpSpec::FiniteAtomic { atoms } => JumpSpec::FiniteAtomic {
                atoms: atoms
                    .iter()
                    .map(|a| {
                        let mut v = vec![0.0; dim];
                        v[offset..offset + a.jump.len()].copy_from_slice(&a.jump);
                        Atom {
                            jump: v,
                            intensity: a.intensity,
                        }
                    })
                    .collect(),
            },
            JumpSpec::Sum { parts } => JumpSpec::Sum {
                parts: parts.iter().map(|p| p.embed(offset, dim)).collect(),
            },
        }
    }

    /// Scales time: the measure of `Z_{c t}` is `c` times the measure of `Z_t`.
    pub fn time_scaled(&self, c: f64) -> JumpSpec {
        match self {
            JumpSpec::None => JumpSpec::None,
            JumpSpec::CompoundPoisson { rate, jump } => JumpSpec::CompoundPoisson {
                rate: rate * c,
                jump: jump.clone(),
            },
            JumpSpec::SymmetricStable { alpha, scale, axis } => JumpSpec::SymmetricStable {
                alpha: *alpha,
                scale: scale * c,
                axis: *axis,
            },
            JumpSpec::GammaSubordinator { shape, rate, axis } => JumpSpec::GammaSubordinator {
                shape: shape * c,
                rate: *rate,
                axis: *axis,
            },
            JumpSpec::FiniteAtomic { atoms } => JumpSpec::FiniteAtomic {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        jump: a.jump.clone(),
                        intensity: a.intensity * c,
                    })
                    .collect(),
            },
            JumpSpec::Sum { parts } => JumpSpec::Sum {
                parts: parts.iter().map(|p| p.time_scaled(c)).collect(),
            },
        }
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let p: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    p as u64
}
