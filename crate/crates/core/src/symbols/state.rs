//! State-dependent symbols `q(x, xi)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use super::grid::BoxDomain;
use crate::error::{check_finite, invalid, Error, Result};
use crate::levy::{quadratic_form, JumpSpec, LevyModel, LevyTriplet};

pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(&[f64]) -> JumpSpec + Send + Sync>;
pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;

/// Differential characteristics `(l(x), Q(x), N(x, dy))`.
#[derive(Clone)]
pub struct StateTriplet {
    pub dim: usize,
    pub drift_fn: VectorFn,
    pub gaussian_fn: MatrixFn,
    pub jumps_fn: JumpFn,
}

impl fmt::Debug for StateTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateTriplet").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl StateTriplet {
    pub fn constant(t: LevyTriplet) -> Self {
        let dim = t.dim();
        let (l, q, j) = (t.drift.clone(), t.gaussian.clone(), t.jumps.clone());
        Self {
            dim,
            drift_fn: Arc::new(move |_| l.clone()),
            gaussian_fn: Arc::new(move |_| q.clone()),
            jumps_fn: Arc::new(move |_| j.clone()),
        }
    }

    /// The pointwise triplet, validated.
    pub fn at(&self, x: &[f64]) -> Result<LevyTriplet> {
        let t = self.at_unchecked(x);
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn at_unchecked(&self, x: &[f64]) -> LevyTriplet {
        LevyTriplet {
            drift: (self.drift_fn)(x),
            gaussian: (self.gaussian_fn)(x),
            jumps: (self.jumps_fn)(x),
        }
    }
}

/// `V1 = i l(y)'xi`.
pub fn v1(t: &LevyTriplet, xi: &[f64]) -> Complex64 {
    let s: f64 = t.drift.iter().zip(xi).map(|(a, b)| a * b).sum();
    Complex64::new(0.0, s)
}

/// `V2 = -xi'Q(y)xi / 2`.
pub fn v2(t: &LevyTriplet, xi: &[f64]) -> Complex64 {
    Complex64::new(-0.5 * quadratic_form(&t.gaussian, xi), 0.0)
}

/// `V3 = int (e^{i xi'z} - 1 - i xi'z chi(z)) N(y, dz)`.
pub fn v3(t: &LevyTriplet, xi: &[f64]) -> Complex64 {
    -t.jumps.exponent(xi)
}

/// Coefficient field `Phi: R^d -> R^{d x m}`.
#[derive(Clone)]
pub struct CoefficientField {
    pub rows: usize,
    pub cols: usize,
    pub label: String,
    f: MatrixFn,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientField({}, {}x{})", self.label, self.rows, self.cols)
    }
}

/// `Phi(x)[r][c] = constant[r][c] + sum over terms of coef * x[coord]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineCoefficient {
    pub constant: Vec<Vec<f64>>,
    #[serde(default)]
    pub linear: Vec<LinearTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTerm {
    pub row: usize,
    pub col: usize,
    pub coord: usize,
    pub coef: f64,
}

impl CoefficientField {
    pub fn new(
        label: impl Into<String>,
        rows: usize,
        cols: usize,
        f: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            rows,
            cols,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(m: Vec<Vec<f64>>) -> Result<Self> {
        let rows = m.len();
        let cols = m.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
            return Err(invalid("constant coefficient must be a nonempty rectangular matrix"));
        }
        Ok(Self::new("constant", rows, cols, move |_| m.clone()))
    }

    /// `Phi(x) = x` for d = m = 1.
    pub fn scalar_linear() -> Self {
        Self::new("x", 1, 1, |x| vec![vec![x[0]]])
    }

    pub fn affine(spec: &AffineCoefficient) -> Result<Self> {
        let rows = spec.constant.len();
        let cols = spec.constant.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || spec.constant.iter().any(|r| r.len() != cols) {
            return Err(invalid("affine coefficient needs a rectangular constant part"));
        }
        for t in &spec.linear {
            if t.row >= rows || t.col >= cols || t.coord >= rows || !t.coef.is_finite() {
                return Err(invalid(format!("linear term out of range: {t:?}")));
            }
        }
        let spec = spec.clone();
        Ok(Self::new("affine", rows, cols, move |x| {
            let mut m = spec.constant.clone();
            for t in &spec.linear {
                m[t.row][t.col] += t.coef * x[t.coord];
            }
            m
        }))
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.f)(x)
    }

    /// `Phi(x)' xi`.
    pub fn transpose_apply(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let m = self.eval(x);
        transpose_apply(&m, xi, self.cols)
    }
}

pub(crate) fn transpose_apply(m: &[Vec<f64>], xi: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (row, x) in m.iter().zip(xi) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * x;
        }
    }
    out
}

#[derive(Clone)]
pub enum Provenance {
    FromTriplet(StateTriplet),
    FromSde {
        driver: LevyModel,
        phi: CoefficientField,
    },
    ClosedForm {
        label: String,
        f: SymbolFn,
    },
}

impl fmt::Debug for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::FromTriplet(t) => write!(f, "FromTriplet({t:?})"),
            Provenance::FromSde { driver, phi } => {
                write!(f, "FromSde(driver={}, phi={phi:?})", driver.label)
            }
            Provenance::ClosedForm { label, .. } => write!(f, "ClosedForm({label})"),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::FromTriplet(_) => write!(f, "from-triplet"),
            Provenance::FromSde { driver, phi } => {
                write!(f, "from-sde(driver={}, phi={})", driver.label, phi.label)
            }
            Provenance::ClosedForm { label, .. } => write!(f, "closed-form({label})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub outside_domain: bool,
}

#[derive(Debug, Clone)]
pub struct StateSymbol {
    pub label: String,
    dim: usize,
    provenance: Provenance,
    pub domain_hint: Option<BoxDomain>,
}

impl StateSymbol {
    pub fn from_triplet(label: impl Into<String>, t: StateTriplet) -> Self {
        Self {
            label: label.into(),
            dim: t.dim,
            provenance: Provenance::FromTriplet(t),
            domain_hint: None,
        }
    }

    pub fn closed_form(
        label: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let label = label.into();
        Self {
            label: label.clone(),
            dim,
            provenance: Provenance::ClosedForm { label, f: Arc::new(f) },
            domain_hint: None,
        }
    }

    /// `q(x, xi) = psi(xi)` for every x.
    pub fn from_levy(model: &LevyModel) -> Self {
        Self::from_triplet(model.label.clone(), StateTriplet::constant(model.triplet().clone()))
    }

    /// Stable-like symbol `|xi|^{2 a(x)}` on the line.
    pub fn stable_like(label: impl Into<String>, a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let t = StateTriplet {
            dim: 1,
            drift_fn: Arc::new(|_| vec![0.0]),
            gaussian_fn: Arc::new(|_| vec![vec![0.0]]),
            jumps_fn: Arc::new(move |x| JumpSpec::symmetric_stable(2.0 * a(x[0]), 1.0)),
        };
        Self::from_triplet(label, t)
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain_hint = Some(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Domain hint, or `[-1, 1]^d`.
    pub fn default_domain(&self) -> BoxDomain {
        self.domain_hint
            .clone()
            .unwrap_or_else(|| BoxDomain::cube(self.dim, 1.0))
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        Ok(self.eval_flagged(x, xi)?.value)
    }

    pub fn eval_flagged(&self, x: &[f64], xi: &[f64]) -> Result<Evaluation> {
        for v in [x, xi] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        check_finite("x", x)?;
        check_finite("xi", xi)?;
        if let Provenance::FromTriplet(t) = &self.provenance {
            t.at(x)?;
        }
        let outside_domain = self.domain_hint.as_ref().is_some_and(|d| !d.contains(x));
        Ok(Evaluation {
            value: self.eval_unchecked(x, xi),
            outside_domain,
        })
    }

    /// Evaluation without input validation, for inner loops.
    pub fn eval_unchecked(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        if xi.iter().all(|v| *v == 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.provenance {
            Provenance::FromTriplet(t) => {
                let tr = t.at_unchecked(x);
                -(v1(&tr, xi) + v2(&tr, xi) + v3(&tr, xi))
            }
            Provenance::FromSde { driver, phi } => {
                let eta = phi.transpose_apply(x, xi);
                driver.exponent_unchecked(&eta)
            }
            Provenance::ClosedForm { f, .. } => f(x, xi),
        }
    }
}

/// Symbol `psi(Phi(x)' xi)` of the solution of `dX = Phi(X-) dZ`.
pub fn sde_symbol(driver: &LevyModel, phi: CoefficientField, d: usize) -> Result<StateSymbol> {
    if phi.cols != driver.dim() {
        return Err(Error::DimensionMismatch {
            expected: driver.dim(),
            got: phi.cols,
        });
    }
    if phi.rows != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: phi.rows,
        });
    }
    Ok(StateSymbol {
        label: format!("sde[{}; {}]", driver.label, phi.label),
        dim: d,
        provenance: Provenance::FromSde {
            driver: driver.clone(),
            phi,
        },
        domain_hint: None,
    })
}
