//! Registered experiments: each binds a claim to models, estimators and
//! pass/fail checks, and writes its artifacts under `<out>/<id>/`.

mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::paths::{write_csv, SamplePath};
use crate::registry::Config;
use crate::rng::derive_seed;
use crate::util::{format_f64, lossless_f64};

pub use experiments::EXPERIMENT_IDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Static description of a registered experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    /// Anchor of the claim under test.
    pub claim_ref: String,
    pub models: Vec<String>,
    /// Default estimator settings and thresholds.
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(with = "lossless_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let outcome = if ok { Outcome::Pass } else { Outcome::Fail };
        Self { name: name.into(), outcome, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub claim_ref: String,
    pub seed: u64,
    pub quick: bool,
    /// Effective parameters after overrides.
    pub inputs: Value,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub verdict: Outcome,
    pub workers: usize,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// Everything except runtime and worker count, serialized; equal
    /// fingerprints mean bit-identical results.
    pub fn fingerprint(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("runtime_secs");
            m.remove("workers");
        }
        v.to_string()
    }

    pub fn summary_line(&self) -> String {
        format!("{} {} ({:.2} s)", self.verdict.as_str(), self.id, self.runtime_secs)
    }

    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("name,value\n");
        for m in &self.metrics {
            s.push_str(&format!("{},{}\n", m.name, format_f64(m.value)));
        }
        s
    }
}

/// How to run: configuration, seed and parameter overrides, parallelism and output.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Config,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Smaller sample sizes, for smoke and determinism runs.
    pub quick: bool,
    /// JSON object merged over the experiment's default parameters.
    pub overrides: Option<Value>,
}

pub(crate) enum Artifact {
    Path(String, SamplePath),
    Text(String, String),
}

/// What an experiment body produces.
pub(crate) struct RunOutput {
    pub inputs: Value,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

pub(crate) struct Ctx<'a> {
    pub config: &'a Config,
    pub seed: u64,
}

/// The full suite, one entry per acceptance criterion.
pub fn builtin_suite() -> Vec<Experiment> {
    EXPERIMENT_IDS
        .iter()
        .map(|id| {
            let (claim_ref, models, params) = experiments::describe(id);
            Experiment { id: id.to_string(), claim_ref: claim_ref.to_string(), models, params }
        })
        .collect()
}

fn merge(base: &mut Value, over: &Value) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                b.insert(k.clone(), v.clone());
            }
            Ok(())
        }
        (_, Value::Null) => Ok(()),
        _ => Err(Error::InvalidInput("overrides must be a JSON object".into())),
    }
}

pub fn run_experiment(id: &str, opts: &RunOptions) -> Result<ExperimentReport> {
    if !EXPERIMENT_IDS.contains(&id) {
        return Err(Error::UnknownName(format!("experiment {id:?}")));
    }
    let master = opts.seed.unwrap_or(opts.config.seed);
    let seed = derive_seed(master, id, 0);
    let (claim_ref, _, mut params) = experiments::describe(id);
    if opts.quick {
        merge(&mut params, &experiments::quick_overrides(id))?;
    }
    if let Some(o) = &opts.overrides {
        merge(&mut params, o)?;
    }
    let ctx = Ctx { config: &opts.config, seed };
    let start = Instant::now();
    let out = if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        pool.install(|| experiments::run(id, &ctx, params))?
    } else {
        experiments::run(id, &ctx, params)?
    };
    let runtime_secs = start.elapsed().as_secs_f64();
    let verdict = if out.checks.iter().any(|c| c.outcome == Outcome::Fail) {
        Outcome::Fail
    } else if out.checks.iter().any(|c| c.outcome == Outcome::Inconclusive) || out.checks.is_empty() {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    let report = ExperimentReport {
        id: id.to_string(),
        claim_ref: claim_ref.to_string(),
        seed,
        quick: opts.quick,
        inputs: out.inputs,
        metrics: out.metrics,
        checks: out.checks,
        verdict,
        workers: opts.workers,
        runtime_secs,
    };
    if let Some(root) = &opts.out {
        write_artifacts(&root.join(id), &report, &out.artifacts)?;
    }
    Ok(report)
}

fn write_artifacts(dir: &Path, report: &ExperimentReport, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    std::fs::write(dir.join("metrics.csv"), report.metrics_csv())?;
    for a in artifacts {
        match a {
            Artifact::Path(name, p) => {
                std::fs::create_dir_all(dir.join("paths"))?;
                write_csv(p, &dir.join("paths").join(format!("{name}.csv")))?;
            }
            Artifact::Text(name, text) => std::fs::write(dir.join(name), text)?,
        }
    }
    Ok(())
}

/// Runs every registered experiment in order.
pub fn run_suite(opts: &RunOptions) -> Result<Vec<ExperimentReport>> {
    EXPERIMENT_IDS.iter().map(|id| run_experiment(id, opts)).collect()
}
