use serde::{Deserialize, Serialize};

use super::levy_path::simulate_levy_from;
use super::{GridSpec, PathSampler, PathStatus, SamplePath};
use crate::error::{check_finite, Error, Result};
use crate::levy::LevyModel;
use crate::rng::RandomState;
use crate::symbols::state::{sde_symbol, CoefficientField, StateSymbol};

/// Norm above which an Euler path is declared exploded.
pub const EXPLOSION_CAP: f64 = 1e12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiProperties {
    #[serde(default)]
    pub locally_lipschitz: bool,
    #[serde(default)]
    pub linear_growth: bool,
    #[serde(default)]
    pub surjective_at: Option<Vec<f64>>,
}

/// `dX = Phi(X-) dZ`, `X_0 = x0`.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub phi: CoefficientField,
    pub driver: LevyModel,
    pub x0: Vec<f64>,
    pub properties: PhiProperties,
}

impl SdeModel {
    pub fn new(phi: CoefficientField, driver: LevyModel, x0: Vec<f64>, properties: PhiProperties) -> Result<Self> {
        if phi.cols != driver.dim() {
            return Err(Error::DimensionMismatch {
                expected: driver.dim(),
                got: phi.cols,
            });
        }
        if phi.rows != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.rows,
                got: x0.len(),
            });
        }
        check_finite("x0", &x0)?;
        let m = phi.eval(&x0);
        if m.len() != phi.rows || m.iter().any(|r| r.len() != phi.cols || r.iter().any(|v| !v.is_finite())) {
            return Err(crate::error::invalid("Phi(x0) must be a finite matrix of the declared shape"));
        }
        Ok(Self {
            phi,
            driver,
            x0,
            properties,
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn symbol(&self) -> Result<StateSymbol> {
        sde_symbol(&self.driver, self.phi.clone(), self.dim())
    }
}

fn apply(phi: &[Vec<f64>], dz: &[f64], x: &mut [f64]) {
    for (xi, row) in x.iter_mut().zip(phi) {
        *xi += row.iter().zip(dz).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euler scheme along a given driver path. Per step the continuous part of
/// the increment is applied with `Phi` at the left point, then each recorded
/// jump with `Phi` at the pre-jump state.
pub fn euler_on_driver(phi: &CoefficientField, x0: &[f64], driver: &SamplePath) -> Result<SamplePath> {
    if driver.dim() != phi.cols {
        return Err(Error::DimensionMismatch {
            expected: phi.cols,
            got: driver.dim(),
        });
    }
    if x0.len() != phi.rows {
        return Err(Error::DimensionMismatch {
            expected: phi.rows,
            got: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut values = vec![x.clone()];
    let mut status = PathStatus::Complete;
    let mut dz = vec![0.0; phi.cols];
    'steps: for i in 1..driver.len() {
        let (a, b) = (driver.times[i - 1], driver.times[i]);
        for (k, d) in dz.iter_mut().enumerate() {
            *d = driver.values[i][k] - driver.values[i - 1][k];
        }
        let jumps: Vec<_> = driver.jumps_in(a, b).collect();
        for j in &jumps {
            for (d, v) in dz.iter_mut().zip(&j.jump) {
                *d -= v;
            }
        }
        let m = phi.eval(&x);
        apply(&m, &dz, &mut x);
        for j in &jumps {
            let m = phi.eval(&x);
            apply(&m, &j.jump, &mut x);
        }
        let r = norm(&x);
        if !(r <= EXPLOSION_CAP) {
            status = PathStatus::Exploded { time: a };
            break 'steps;
        }
        times.push(b);
        values.push(x.clone());
    }
    Ok(SamplePath {
        times,
        values,
        scheme: format!("euler[{}]", phi.label),
        seed: driver.seed,
        jumps: None,
        status,
    })
}

pub fn simulate_sde_euler(sde: &SdeModel, grid: &GridSpec, rng: &mut RandomState) -> Result<SamplePath> {
    sde.sample_from(&sde.x0, grid, rng, false)
}

impl PathSampler for SdeModel {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn label(&self) -> String {
        format!("sde[{}; {}]", self.driver.label, self.phi.label)
    }

    fn sample_from(&self, x0: &[f64], grid: &GridSpec, rng: &mut RandomState, mirror: bool) -> Result<SamplePath> {
        let z = simulate_levy_from(&self.driver, &vec![0.0; self.driver.dim()], grid, rng, mirror)?;
        let mut p = euler_on_driver(&self.phi, x0, &z)?;
        p.seed = rng.seed();
        Ok(p)
    }

    fn supports_mirror(&self) -> bool {
        self.driver.noise_is_symmetric()
    }
}
