//! Named model definitions and the JSON configuration that refers to them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::levy::{JumpDist, LevyModel};
use crate::paths::{ConstantSampler, LevySampler, PathSampler, PhiProperties, SdeModel, StableLikeSampler};
use crate::symbols::{AffineCoefficient, BoxDomain, CoefficientField, GridConfig, LinearTerm, StateSymbol};

/// A model description; Levy kinds can serve as SDE drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDef {
    Constant {
        dim: usize,
    },
    Brownian {
        #[serde(default = "one")]
        sigma: f64,
    },
    Drift {
        drift: Vec<f64>,
    },
    Stable {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    CompoundPoisson {
        rate: f64,
        jump: JumpDist,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Independent components stacked into one vector.
    Product {
        blocks: Vec<ModelDef>,
    },
    /// `dX = sigma X dW`.
    Gbm {
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `dX = Phi(X-) dZ` with affine `Phi`; with `clip`, the state entering the
    /// linear terms is clamped to `[-clip, clip]`, which bounds `Phi`.
    Sde {
        driver: Box<ModelDef>,
        phi: AffineCoefficient,
        #[serde(default)]
        clip: Option<f64>,
    },
    /// Symmetric stable-like, index `2 a(x)` with `a(x) = a0 + a1 sin^2 x`.
    StableLike {
        a0: f64,
        a1: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A model ready for evaluation and simulation.
#[derive(Clone)]
pub struct BuiltModel {
    pub name: String,
    pub def: ModelDef,
    pub symbol: StateSymbol,
    pub sampler: Arc<dyn PathSampler>,
    /// Present for space-homogeneous models.
    pub levy: Option<LevyModel>,
    /// Default start point for simulation.
    pub start: Vec<f64>,
}

impl std::fmt::Debug for BuiltModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BuiltModel({})", self.name)
    }
}

impl BuiltModel {
    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }
}

impl ModelDef {
    /// The Levy law, if this definition is space-homogeneous.
    pub fn levy(&self, name: &str) -> Result<Option<LevyModel>> {
        let m = match self {
            ModelDef::Constant { dim } => {
                if *dim == 0 {
                    return Err(invalid("constant model needs dim >= 1"));
                }
                LevyModel::drift_only(vec![0.0; *dim])?
            }
            ModelDef::Brownian { sigma } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(invalid("sigma must be finite and >= 0"));
                }
                LevyModel::brownian(*sigma)
            }
            ModelDef::Drift { drift } => LevyModel::drift_only(drift.clone())?,
            ModelDef::Stable { alpha, scale } => LevyModel::symmetric_stable(*alpha, *scale)?,
            ModelDef::CompoundPoisson { rate, jump } => LevyModel::compound_poisson(*rate, jump.clone())?,
            ModelDef::Gamma { shape, rate } => LevyModel::gamma_subordinator(*shape, *rate)?,
            ModelDef::Product { blocks } => {
                let parts = blocks
                    .iter()
                    .map(|b| b.levy(name)?.ok_or_else(|| invalid("product blocks must be Levy models")))
                    .collect::<Result<Vec<_>>>()?;
                LevyModel::product(name, &parts)?
            }
            _ => return Ok(None),
        };
        Ok(Some(m.with_label(name)))
    }

    pub fn build(&self, name: &str) -> Result<BuiltModel> {
        if let Some(levy) = self.levy(name)? {
            let sampler: Arc<dyn PathSampler> = match self {
                ModelDef::Constant { dim } => Arc::new(ConstantSampler { dim: *dim }),
                _ => Arc::new(LevySampler { model: levy.clone() }),
            };
            return Ok(BuiltModel {
                name: name.into(),
                def: self.clone(),
                symbol: StateSymbol::from_levy(&levy),
                sampler,
                start: vec![0.0; levy.dim()],
                levy: Some(levy),
            });
        }
        let (symbol, sampler, start): (StateSymbol, Arc<dyn PathSampler>, Vec<f64>) = match self {
            ModelDef::Gbm { sigma } => {
                let s = *sigma;
                if !s.is_finite() {
                    return Err(invalid("sigma must be finite"));
                }
                let phi = CoefficientField::new("sigma*x", 1, 1, move |x| vec![vec![s * x[0]]]);
                let sde = SdeModel::new(phi, LevyModel::brownian(1.0), vec![1.0], PhiProperties::default())?;
                (sde.symbol()?, Arc::new(sde), vec![1.0])
            }
            ModelDef::Sde { driver, phi, clip } => {
                let drv = driver
                    .levy(&format!("{name}-driver"))?
                    .ok_or_else(|| invalid("SDE driver must be a Levy model"))?;
                let field = match clip {
                    None => CoefficientField::affine(phi)?,
                    Some(c) => {
                        if !(*c > 0.0 && c.is_finite()) {
                            return Err(invalid("clip must be finite and > 0"));
                        }
                        let base = CoefficientField::affine(phi)?;
                        let c = *c;
                        let (rows, cols) = (base.rows, base.cols);
                        CoefficientField::new("clipped affine", rows, cols, move |x| {
                            let y: Vec<f64> = x.iter().map(|v| v.clamp(-c, c)).collect();
                            base.eval(&y)
                        })
                    }
                };
                let d = field.rows;
                let sde = SdeModel::new(field, drv, vec![0.0; d], PhiProperties::default())?;
                (sde.symbol()?, Arc::new(sde), vec![0.0; d])
            }
            ModelDef::StableLike { a0, a1 } => {
                let (a0, a1) = (*a0, *a1);
                let lo = a0.min(a0 + a1);
                let hi = a0.max(a0 + a1);
                if !(lo > 0.0 && hi <= 1.0) {
                    return Err(invalid("stable-like a(x) must stay in (0, 1]"));
                }
                let a = move |x: f64| a0 + a1 * x.sin().powi(2);
                (
                    StateSymbol::stable_like(name, a).with_domain(BoxDomain::cube(1, 2.0)),
                    Arc::new(StableLikeSampler::new(name, a)),
                    vec![0.0],
                )
            }
            _ => unreachable!("Levy kinds handled above"),
        };
        Ok(BuiltModel { name: name.into(), def: self.clone(), symbol, sampler, levy: None, start })
    }
}

/// Names always available, possibly overridden by a config file.
pub fn builtin_models() -> BTreeMap<String, ModelDef> {
    use ModelDef::*;
    let mut m = BTreeMap::new();
    let mut add = |k: &str, v: ModelDef| {
        m.insert(k.to_string(), v);
    };
    add("constant", Constant { dim: 1 });
    add("bm", Brownian { sigma: 1.0 });
    add("drift", Drift { drift: vec![3.0] });
    add("stable-1.2", Stable { alpha: 1.2, scale: 1.0 });
    add("cp", CompoundPoisson { rate: 2.0, jump: JumpDist::Normal { mean: 0.0, std: 1.0, axis: 0 } });
    add("gamma", Gamma { shape: 1.0, rate: 1.0 });
    add("gbm", Gbm { sigma: 1.0 });
    add("stablelike", StableLike { a0: 0.3, a1: 0.2 });
    add(
        "poisson-bm",
        Sde {
            driver: Box::new(Product {
                blocks: vec![
                    Brownian { sigma: 1.0 },
                    CompoundPoisson { rate: 1.0, jump: JumpDist::Dirac { jump: vec![1.0] } },
                ],
            }),
            phi: AffineCoefficient {
                constant: vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                linear: vec![LinearTerm { row: 1, col: 1, coord: 1, coef: 1.0 }],
            },
            clip: None,
        },
    );
    add(
        "projection",
        Sde {
            driver: Box::new(Product {
                blocks: vec![Drift { drift: vec![1.0] }, Stable { alpha: 1.2, scale: 1.0 }, Brownian { sigma: 1.0 }],
            }),
            phi: AffineCoefficient { constant: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], linear: vec![] },
            clip: None,
        },
    );
    add(
        "transfer",
        Sde {
            driver: Box::new(Product { blocks: vec![Stable { alpha: 1.2, scale: 1.0 }, Brownian { sigma: 1.0 }] }),
            phi: AffineCoefficient {
                constant: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                linear: vec![
                    LinearTerm { row: 0, col: 0, coord: 0, coef: 0.5 },
                    LinearTerm { row: 1, col: 0, coord: 1, coef: 0.3 },
                ],
            },
            clip: Some(1.0),
        },
    );
    m
}

/// Top-level JSON configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed for every experiment and simulation.
    pub seed: u64,
    /// Output root directory.
    pub out: PathBuf,
    /// Extra or overriding model definitions.
    pub models: BTreeMap<String, ModelDef>,
    /// Grid override for index estimation; dimension defaults otherwise.
    pub grid: Option<GridConfig>,
    pub eps_finite: f64,
    pub eps_infinite: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 20240607,
            out: PathBuf::from("out"),
            models: BTreeMap::new(),
            grid: None,
            eps_finite: 0.1,
            eps_infinite: 0.2,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.eps_finite && self.eps_finite <= self.eps_infinite) {
            return Err(invalid("need 0 <= eps_finite <= eps_infinite"));
        }
        for (name, def) in &self.models {
            def.build(name)?;
        }
        Ok(())
    }

    pub fn model_names(&self) -> Vec<String> {
        let mut all = builtin_models();
        all.extend(self.models.clone());
        all.into_keys().collect()
    }

    pub fn model(&self, name: &str) -> Result<BuiltModel> {
        let def = self
            .models
            .get(name)
            .cloned()
            .or_else(|| builtin_models().remove(name))
            .ok_or_else(|| Error::UnknownName(format!("model {name:?}")))?;
        def.build(name)
    }

    pub fn grid_for(&self, d: usize) -> GridConfig {
        self.grid.clone().unwrap_or_else(|| GridConfig::for_dim(d))
    }
}
