//! Canonical Levy processes: triplets, characteristic exponents, classical
//! Blumenthal-Getoor indices and exact increment sampling.

mod jumps;
pub mod stable;

pub use jumps::{stable_density_constant, Atom, JumpDist, JumpSpec};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Error, Result};
use crate::symbols::{index_from_growth, GrowthMode, IndexEstimate};


const PSD_TOL: f64 = 1e-12;

/// `(drift, gaussian covariance, jump measure)`, all per unit time, with the
/// closed-unit-ball cut-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    pub drift: Vec<f64>,
    pub gaussian: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: JumpSpec,
}

impl LevyTriplet {
    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(invalid("triplet dimension must be positive"));
        }
        check_finite("drift", &self.drift)?;
        if self.gaussian.len() != d || self.gaussian.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.gaussian.len(),
            });
        }
        for row in &self.gaussian {
            check_finite("gaussian", row)?;
        }
        check_psd(&self.gaussian)?;
        self.jumps.validate(d)
    }

    /// `-i l'xi + xi'Q xi / 2 + psi_J(xi)`.
    pub fn exponent(&self, xi: &[f64]) -> Complex64 {
        let lin: f64 = self.drift.iter().zip(xi).map(|(l, x)| l * x).sum();
        let quad = quadratic_form(&self.gaussian, xi);
        Complex64::new(0.5 * quad, -lin) + self.jumps.exponent(xi)
    }

    /// Drift once the compensator of the finite-variation jumps is removed.
    pub fn plain_drift(&self) -> Vec<f64> {
        let comp = self.jumps.compensator(self.dim());
        self.drift.iter().zip(comp).map(|(l, c)| l - c).collect()
    }

    pub fn has_gaussian(&self) -> bool {
        self.gaussian.iter().enumerate().any(|(i, r)| r[i] > PSD_TOL)
    }
}

pub(crate) fn quadratic_form(q: &[Vec<f64>], xi: &[f64]) -> f64 {
    q.iter()
        .zip(xi)
        .map(|(row, xa)| xa * row.iter().zip(xi).map(|(qab, xb)| qab * xb).sum::<f64>())
        .sum()
}

fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let d = m.len();
    DMatrix::from_fn(d, d, |i, j| m[i][j])
}

/// Symmetric with nonnegative spectrum, both relative to the matrix norm.
pub fn check_psd(m: &[Vec<f64>]) -> Result<()> {
    let a = to_dmatrix(m);
    let scale = a.norm().max(1.0);
    let asym = (&a - a.transpose()).amax();
    if asym > PSD_TOL * scale {
        return Err(invalid(format!("gaussian matrix is not symmetric (defect {asym:e})")));
    }
    let eig = SymmetricEigen::new(a);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL * scale {
        return Err(invalid(format!("gaussian matrix has negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Symmetric square root of a PSD matrix.
pub(crate) fn psd_sqrt(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let eig = SymmetricEigen::new(to_dmatrix(m));
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    (0..d).map(|i| (0..d).map(|j| root[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevyModelDef {
    #[serde(default)]
    label: String,
    triplet: LevyTriplet,
}

/// A Levy process given by its triplet.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LevyModelDef", into = "LevyModelDef")]
pub struct LevyModel {
    pub label: String,
    triplet: LevyTriplet,
    gauss_root: Vec<Vec<f64>>,
    plain_drift: Vec<f64>,
}

impl TryFrom<LevyModelDef> for LevyModel {
    type Error = Error;

    fn try_from(def: LevyModelDef) -> Result<Self> {
        LevyModel::new(def.label, def.triplet)
    }
}

impl From<LevyModel> for LevyModelDef {
    fn from(m: LevyModel) -> Self {
        LevyModelDef {
            label: m.label,
            triplet: m.triplet,
        }
    }
}

impl PartialEq for LevyModel {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.triplet == other.triplet
    }
}

fn zeros(d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]; d]
}

impl LevyModel {
    pub fn new(label: impl Into<String>, triplet: LevyTriplet) -> Result<Self> {
        triplet.validate()?;
        Ok(Self {
            label: label.into(),
            gauss_root: psd_sqrt(&triplet.gaussian),
            plain_drift: triplet.plain_drift(),
            triplet,
        })
    }

    /// Builds the triplet from the uncompensated drift `b0`, i.e. `Z_t = b0 t + sigma W_t + (jumps)`.
    pub fn from_plain_drift(
        label: impl Into<String>,
        plain_drift: Vec<f64>,
        gaussian: Vec<Vec<f64>>,
        jumps: JumpSpec,
    ) -> Result<Self> {
        let d = plain_drift.len();
        jumps.validate(d)?;
        let comp = jumps.compensator(d);
        let drift = plain_drift.iter().zip(comp).map(|(b, c)| b + c).collect();
        Self::new(label, LevyTriplet { drift, gaussian, jumps })
    }

    pub fn brownian(sigma: f64) -> Self {
        Self::new(
            "brownian",
            LevyTriplet {
                drift: vec![0.0],
                gaussian: vec![vec![sigma * sigma]],
                jumps: JumpSpec::None,
            },
        )
        .expect("valid brownian triplet")
    }

    pub fn drift_only(drift: Vec<f64>) -> Result<Self> {
        let d = drift.len();
        Self::new(
            "drift",
            LevyTriplet {
                drift,
                gaussian: zeros(d),
                jumps: JumpSpec::None,
            },
        )
    }

    pub fn symmetric_stable(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(
            format!("stable-{alpha}"),
            LevyTriplet {
                drift: vec![0.0],
                gaussian: zeros(1),
                jumps: JumpSpec::symmetric_stable(alpha, scale),
            },
        )
    }

    /// Plain compound Poisson process (no compensating drift in the path).
    pub fn compound_poisson(rate: f64, jump: JumpDist) -> Result<Self> {
        let d = match &jump {
            JumpDist::Dirac { jump } => jump.len(),
            JumpDist::Normal { axis, .. } | JumpDist::Exponential { axis, .. } => axis + 1,
        };
        Self::from_plain_drift(
            "compound-poisson",
            vec![0.0; d],
            zeros(d),
            JumpSpec::CompoundPoisson { rate, jump },
        )
    }

    pub fn gamma_subordinator(shape: f64, rate: f64) -> Result<Self> {
        Self::from_plain_drift(
            "gamma-subordinator",
            vec![0.0],
            zeros(1),
            JumpSpec::GammaSubordinator { shape, rate, axis: 0 },
        )
    }

    /// Independent blocks stacked into one process.
    pub fn product(label: impl Into<String>, blocks: &[LevyModel]) -> Result<Self> {
        let dim: usize = blocks.iter().map(LevyModel::dim).sum();
        let mut drift = Vec::with_capacity(dim);
        let mut gaussian = zeros(dim);
        let mut parts = Vec::new();
        let mut offset = 0;
        for b in blocks {
            let t = &b.triplet;
            drift.extend_from_slice(&t.drift);
            for (i, row) in t.gaussian.iter().enumerate() {
                gaussian[offset + i][offset..offset + row.len()].copy_from_slice(row);
            }
            if !t.jumps.is_none() {
                parts.push(t.jumps.embed(offset, dim));
            }
            offset += b.dim();
        }
        let jumps = match parts.len() {
            0 => JumpSpec::None,
            1 => parts.pop().expect("one part"),
            _ => JumpSpec::Sum { parts },
        };
        Self::new(label, LevyTriplet { drift, gaussian, jumps })
    }

    /// The process `t -> Z_{c t}`.
    pub fn time_scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("time scale must be > 0"));
        }
        let t = &self.triplet;
        Self::new(
            format!("{}@{c}", self.label),
            LevyTriplet {
                drift: t.drift.iter().map(|v| v * c).collect(),
                gaussian: t.gaussian.iter().map(|r| r.iter().map(|v| v * c).collect()).collect(),
                jumps: t.jumps.time_scaled(c),
            },
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.triplet.dim()
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn plain_drift(&self) -> &[f64] {
        &self.plain_drift
    }

    /// Whether `Z_t - b0 t` is symmetric in law (antithetic sampling is then exact).
    pub fn noise_is_symmetric(&self) -> bool {
        self.triplet.jumps.is_symmetric()
    }

    /// Bounded exponent: no Gaussian part, no linear drift, finite jump measure.
    pub fn has_bounded_exponent(&self) -> bool {
        !self.triplet.has_gaussian()
            && self.plain_drift.iter().all(|v| *v == 0.0)
            && self.triplet.jumps.is_finite_activity()
    }

    /// `psi(xi)` with `E exp(i xi'Z_t) = exp(-t psi(xi))`.
    pub fn char_exponent(&self, xi: &[f64]) -> Result<Complex64> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        check_finite("xi", xi)?;
        Ok(self.exponent_unchecked(xi))
    }

    pub(crate) fn exponent_unchecked(&self, xi: &[f64]) -> Complex64 {
        self.triplet.exponent(xi)
    }

    /// One exact draw of `Z_{t+dt} - Z_t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be > 0, got {dt}")));
        }
        let mut out = self.sample_noise(dt, true, rng);
        for (o, b) in out.iter_mut().zip(&self.plain_drift) {
            *o += b * dt;
        }
        Ok(out)
    }

    /// Gaussian plus jump part of an increment; finite-activity jumps only when `with_finite`.
    pub(crate) fn sample_noise<R: Rng + ?Sized>(
        &self,
        dt: f64,
        with_finite: bool,
        rng: &mut R,
    ) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        if self.triplet.has_gaussian() {
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let s = dt.sqrt();
            for (i, o) in out.iter_mut().enumerate() {
                *o += s * self.gauss_root[i].iter().zip(&z).map(|(r, z)| r * z).sum::<f64>();
            }
        }
        if with_finite {
            self.triplet.jumps.sample_increment(dt, &mut out, rng);
        } else {
            self.triplet.jumps.sample_infinite_activity(dt, &mut out, rng);
        }
        out
    }

    pub fn classical_indices(&self) -> ClassicalIndices {
        let t = &self.triplet;
        let beta = t.jumps.bg_index();
        let linear = self.plain_drift.iter().any(|v| v.abs() > 0.0);
        let (beta1, beta2) = if t.has_gaussian() {
            (2.0, 2.0)
        } else if beta >= 1.0 {
            (beta, beta)
        } else if linear {
            (1.0, beta)
        } else {
            (beta, beta)
        };
        let (abs_samples, re_samples) = self.exponent_growth_samples();
        let numeric_beta1 = index_from_growth(&abs_samples, GrowthMode::AtInfinity).ok();
        let numeric_beta2 = index_from_growth(&re_samples, GrowthMode::AtInfinity).ok();
        ClassicalIndices {
            beta,
            beta1,
            beta2,
            beta1_gap: numeric_beta1.as_ref().map(|e| e.value - beta1),
            beta2_gap: numeric_beta2.as_ref().map(|e| e.value - beta2),
            numeric_beta1,
            numeric_beta2,
        }
    }

    /// Envelopes `sup_{|xi| <= r} |psi|` and `sup_{|xi| <= r} Re psi` on r = 2^4..2^16.
    fn exponent_growth_samples(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let dirs = crate::symbols::grid::unit_directions(self.dim(), 64);
        let mut abs_env = 0.0f64;
        let mut re_env = 0.0f64;
        let mut abs_out = Vec::new();
        let mut re_out = Vec::new();
        let mut prev = 0.0;
        for k in 4..=16 {
            let r = 2f64.powi(k);
            for s in 1..=8 {
                let rho = prev + (r - prev) * s as f64 / 8.0;
                for u in &dirs {
                    let xi: Vec<f64> = u.iter().map(|c| c * rho).collect();
                    let psi = self.exponent_unchecked(&xi);
                    abs_env = abs_env.max(psi.norm());
                    re_env = re_env.max(psi.re);
                }
            }
            prev = r;
            abs_out.push((r, abs_env));
            re_out.push((r, re_env));
        }
        (abs_out, re_out)
    }
}

/// Analytic `beta, beta1, beta2` plus numeric growth-slope estimates of the last two.
#[derive(Debug, Clone)]
pub struct ClassicalIndices {
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub numeric_beta1: Option<IndexEstimate>,
    pub numeric_beta2: Option<IndexEstimate>,
    pub beta1_gap: Option<f64>,
    pub beta2_gap: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomState;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponent_examples() {
        let bm = LevyModel::brownian(1.0);
        assert!((bm.char_exponent(&[2.0]).unwrap() - c(2.0, 0.0)).norm() < 1e-15);

        let st = LevyModel::symmetric_stable(1.2, 1.0).unwrap();
        assert!((st.char_exponent(&[1.0]).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let cp = LevyModel::compound_poisson(3.0, JumpDist::Dirac { jump: vec![1.0] }).unwrap();
        assert!((cp.char_exponent(&[PI]).unwrap() - c(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn non_finite_xi_is_rejected() {
        let bm = LevyModel::brownian(1.0);
        assert!(bm.char_exponent(&[f64::NAN]).is_err());
        assert!(bm.char_exponent(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn psd_check() {
        assert!(check_psd(&[vec![1.0, 0.5], vec![0.5, 1.0]]).is_ok());
        assert!(check_psd(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(check_psd(&[vec![1.0, 0.1], vec![0.0, 1.0]]).is_err());
        let root = psd_sqrt(&[vec![4.0, 0.0], vec![0.0, 0.0]]);
        assert!((root[0][0] - 2.0).abs() < 1e-12 && root[1][1].abs() < 1e-12);
    }

    #[test]
    fn classical_index_table() {
        let bm = LevyModel::brownian(1.0).classical_indices();
        assert_eq!((bm.beta1, bm.beta2), (2.0, 2.0));

        let st = LevyModel::from_plain_drift(
            "stable+drift",
            vec![1.0],
            zeros(1),
            JumpSpec::symmetric_stable(0.7, 1.0),
        )
        .unwrap()
        .classical_indices();
        assert_eq!((st.beta, st.beta1, st.beta2), (0.7, 1.0, 0.7));
        assert!(st.beta2_gap.unwrap().abs() < 0.05);

        let cp = LevyModel::compound_poisson(2.0, JumpDist::Normal { mean: 0.0, std: 1.0, axis: 0 })
            .unwrap()
            .classical_indices();
        assert_eq!((cp.beta, cp.beta1, cp.beta2), (0.0, 0.0, 0.0));
        assert!(cp.beta1_gap.unwrap().abs() < 0.05);

        let s12 = LevyModel::symmetric_stable(1.2, 1.0).unwrap().classical_indices();
        assert!(s12.beta1_gap.unwrap().abs() < 1e-9);
    }

    #[test]
    fn drift_only_increment_is_deterministic() {
        let m = LevyModel::drift_only(vec![3.0]).unwrap();
        let mut rng = RandomState::new(1);
        assert_eq!(m.sample_increment(0.5, &mut rng).unwrap(), vec![1.5]);
        assert!(m.sample_increment(0.0, &mut rng).is_err());
    }

    #[test]
    fn brownian_increment_variance() {
        let m = LevyModel::brownian(1.0);
        let mut rng = RandomState::new(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| m.sample_increment(1.0, &mut rng).unwrap()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn stable_increment_characteristic_function() {
        let m = LevyModel::symmetric_stable(1.2, 1.0).unwrap();
        let mut rng = RandomState::new(3);
        let n = 100_000;
        let cs: Vec<f64> = (0..n).map(|_| m.sample_increment(1.0, &mut rng).unwrap()[0].cos()).collect();
        let mean = cs.iter().sum::<f64>() / n as f64;
        let sd = (cs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - (-1.0f64).exp()).abs() <= 3.0 * se, "{mean} se {se}");
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let m = LevyModel::product(
            "t-z-w",
            &[
                LevyModel::drift_only(vec![1.0]).unwrap(),
                LevyModel::symmetric_stable(1.2, 1.0).unwrap(),
                LevyModel::brownian(1.0),
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: LevyModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"label":"x","triplet":{"drift":[0],"gaussian":[[-1]]}}"#;
        assert!(serde_json::from_str::<LevyModel>(bad).is_err());
    }
}
