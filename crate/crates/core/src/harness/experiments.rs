use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::function::gamma::gamma;

use super::{Artifact, Check, Ctx, Metric, Outcome, RunOptions, RunOutput};
use crate::error::{invalid, Error, Result};
use crate::levy::{JumpDist, JumpSpec, LevyModel};
use crate::paths::{
    cantor_divergence, cogarch_closed_form_variance, simulate_bns, simulate_cogarch, simulate_gou, simulate_levy,
    BnsParams, CogarchParams, GridSpec, LevySampler,
};
use crate::pvar::{pvar_bruteforce, pvar_exact, variation_index_estimate, VarIndexConfig, VarIndexReport, VarVerdict};
use crate::rng::RandomState;
use crate::symbols::{
    d_integral_jumps, h_uniform, index_beta_inf_unif, index_beta_inf_unif1, index_beta_loc, index_spot,
    mc_h_estimate, mc_symbol_estimate, GridConfig, McConfig, Verdict,
};
use crate::util::{format_f64, mean_and_se, median};

pub const EXPERIMENT_IDS: [&str; 15] = [
    "pvar-oracle",
    "stable-dichotomy-1.2",
    "bm-index",
    "stablelike-index",
    "gbm-symbol-mc",
    "gbm-indices",
    "index-sandwich",
    "sde-transfer",
    "d-dichotomy",
    "h-trend",
    "cogarch-closedform",
    "bns-gvar",
    "gou-gaussian",
    "cantor-divergence",
    "determinism",
];

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("params serialize")
}

pub(super) fn describe(id: &str) -> (&'static str, Vec<String>, Value) {
    let m = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match id {
        "pvar-oracle" => ("definition of strong p-variation", m(&[]), to_value(&OracleParams::default())),
        "stable-dichotomy-1.2" => (
            "criteria p > beta_unif (finite) and p < beta_loc (infinite) for symmetric stable processes",
            m(&["stable-1.2"]),
            to_value(&VarIndexParams::stable()),
        ),
        "bm-index" => ("Brownian component forces index 2", m(&["bm"]), to_value(&VarIndexParams::bm())),
        "stablelike-index" => (
            "stable-like process: beta_unif = 2 a_inf, beta_loc(x) = 2 a(x)",
            m(&["stablelike"]),
            to_value(&StableLikeParams::default()),
        ),
        "gbm-symbol-mc" => ("geometric Brownian motion symbol x^2 xi^2 / 2", m(&["gbm"]), to_value(&GbmMcParams::default())),
        "gbm-indices" => (
            "geometric Brownian motion: beta_unif = +inf, beta_unif1 = 2",
            m(&["gbm"]),
            to_value(&GbmIndexParams::default()),
        ),
        "index-sandwich" => (
            "beta_loc(x) <= beta_unif1 <= beta_unif",
            m(&["bm", "constant", "cp", "drift", "gamma", "stable-1.2", "stablelike", "poisson-bm", "projection", "transfer"]),
            to_value(&SandwichParams::default()),
        ),
        "sde-transfer" => (
            "index transfer for Levy-driven SDEs with surjective coefficient",
            m(&["transfer", "projection"]),
            to_value(&TransferParams::default()),
        ),
        "d-dichotomy" => ("divergence integral of the stable jump measure", m(&["stable-1.2"]), to_value(&DParams::default())),
        "h-trend" => ("h(t, y) diverges for lambda below the local index", m(&["stable-1.2"]), to_value(&HTrendParams::default())),
        "cogarch-closedform" => ("COGARCH volatility closed form", m(&[]), to_value(&CogarchExpParams::default())),
        "bns-gvar" => ("BNS log-price has variation index 2", m(&[]), to_value(&BnsExpParams::default())),
        "gou-gaussian" => ("Gaussian Ornstein-Uhlenbeck as generalized OU", m(&[]), to_value(&GouParams::default())),
        "cantor-divergence" => ("Cantor function quotient tends to infinity", m(&[]), to_value(&CantorParams::default())),
        "determinism" => ("reproducible seeding", m(&[]), to_value(&DeterminismParams::default())),
        _ => unreachable!("id checked by caller"),
    }
}

pub(super) fn quick_overrides(id: &str) -> Value {
    match id {
        "pvar-oracle" => json!({"cases": 40}),
        "stable-dichotomy-1.2" | "bm-index" | "bns-gvar" => json!({"n_paths": 4, "levels": [6, 7, 8, 9]}),
        "gbm-symbol-mc" => json!({"n": 2000}),
        "index-sandwich" => json!({"models": ["bm", "stable-1.2", "stablelike"]}),
        "sde-transfer" => json!({"grid": {"directions": 8, "radii": 4, "ball_radii": 2, "box_points": 3, "doublings": 1}}),
        "h-trend" => json!({"n": 2000}),
        "cogarch-closedform" => json!({"n_paths": 3, "level": 8, "levels": [4, 5, 6, 7, 8]}),
        "gou-gaussian" => json!({"n_paths": 200, "level": 6}),
        "determinism" => json!({"ids": ["pvar-oracle", "gbm-symbol-mc", "h-trend"]}),
        _ => json!({}),
    }
}

fn parse<T: DeserializeOwned + Serialize>(v: Value) -> Result<(T, Value)> {
    let t: T = serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("experiment parameters: {e}")))?;
    let echo = to_value(&t);
    Ok((t, echo))
}

pub(super) fn run(id: &str, ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    match id {
        "pvar-oracle" => pvar_oracle(ctx, params),
        "stable-dichotomy-1.2" => stable_dichotomy(ctx, params),
        "bm-index" => bm_index(ctx, params),
        "stablelike-index" => stablelike_index(ctx, params),
        "gbm-symbol-mc" => gbm_symbol_mc(ctx, params),
        "gbm-indices" => gbm_indices(ctx, params),
        "index-sandwich" => index_sandwich(ctx, params),
        "sde-transfer" => sde_transfer(ctx, params),
        "d-dichotomy" => d_dichotomy(ctx, params),
        "h-trend" => h_trend(ctx, params),
        "cogarch-closedform" => cogarch(ctx, params),
        "bns-gvar" => bns_gvar(ctx, params),
        "gou-gaussian" => gou_gaussian(ctx, params),
        "cantor-divergence" => cantor(ctx, params),
        "determinism" => determinism(ctx, params),
        _ => Err(Error::UnknownName(format!("experiment {id:?}"))),
    }
}

fn metric(name: impl Into<String>, value: f64) -> Metric {
    Metric { name: name.into(), value }
}

fn output(inputs: Value, metrics: Vec<Metric>, checks: Vec<Check>) -> RunOutput {
    RunOutput { inputs, metrics, checks, artifacts: Vec::new() }
}

// ---------------------------------------------------------------- pvar-oracle

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleParams {
    cases: usize,
    max_len: usize,
    p_grid: Vec<f64>,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { cases: 500, max_len: 12, p_grid: vec![0.5, 1.0, 1.5, 2.0, 3.0] }
    }
}

/// Random sequence `i`: length in `2..=max_len`, dimension alternating 1 and 2.
pub fn oracle_sequence(seed: u64, i: usize, max_len: usize) -> Vec<Vec<f64>> {
    let mut rng = RandomState::derive(seed, "pvar-oracle", i as u64);
    let n = rng.random_range(2..=max_len.max(2));
    let d = 1 + i % 2;
    (0..n).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

fn pvar_oracle(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (OracleParams, _) = parse(params)?;
    if p.max_len > 20 {
        return Err(invalid("max_len above the brute-force limit of 20"));
    }
    let rows: Vec<(usize, f64)> = (0..p.cases)
        .into_par_iter()
        .map(|i| {
            let v = oracle_sequence(ctx.seed, i, p.max_len);
            let mut bad = 0;
            let mut worst = 0.0f64;
            for &q in &p.p_grid {
                let a = pvar_exact(&v, q)?.value;
                let b = pvar_bruteforce(&v, q)?.value;
                if a != b {
                    bad += 1;
                    worst = worst.max((a - b).abs() / b.abs().max(1e-300));
                }
            }
            Ok((bad, worst))
        })
        .collect::<Result<_>>()?;
    let mismatches: usize = rows.iter().map(|r| r.0).sum();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let comparisons = p.cases * p.p_grid.len();
    Ok(output(
        inputs,
        vec![metric("comparisons", comparisons as f64), metric("mismatches", mismatches as f64), metric("max_rel_diff", worst)],
        vec![Check::new("exact equality", mismatches == 0, format!("{mismatches} of {comparisons} differ"))],
    ))
}

// ------------------------------------------------------- variation index runs

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarIndexParams {
    model: String,
    horizon: f64,
    levels: Vec<u32>,
    p_grid: Vec<f64>,
    n_paths: usize,
    #[serde(default)]
    verdict_gap: Option<u32>,
    /// Exponents that must be finite / infinite.
    finite_at: Vec<f64>,
    infinite_at: Vec<f64>,
    #[serde(default)]
    min_growth_at_infinite: Option<f64>,
    #[serde(default)]
    target: Option<f64>,
    #[serde(default)]
    target_tol: Option<f64>,
}

impl VarIndexParams {
    fn stable() -> Self {
        Self {
            model: "stable-1.2".into(),
            horizon: 1.0,
            levels: (8..=14).collect(),
            p_grid: vec![1.0, 1.5],
            n_paths: 50,
            verdict_gap: None,
            finite_at: vec![1.5],
            infinite_at: vec![1.0],
            min_growth_at_infinite: Some(1.2),
            target: None,
            target_tol: None,
        }
    }

    fn bm() -> Self {
        Self {
            model: "bm".into(),
            p_grid: vec![1.5, 1.7, 1.8, 1.9, 2.1, 2.2, 2.3, 2.5],
            finite_at: vec![2.5],
            infinite_at: vec![1.5],
            min_growth_at_infinite: None,
            target: Some(2.0),
            target_tol: Some(0.15),
            ..Self::stable()
        }
    }

    fn index_config(&self, ctx: &Ctx<'_>) -> VarIndexConfig {
        let mut c = VarIndexConfig::new(self.horizon, self.levels.clone(), self.p_grid.clone(), self.n_paths);
        c.eps_finite = ctx.config.eps_finite;
        c.eps_infinite = ctx.config.eps_infinite;
        c.verdict_gap = self.verdict_gap;
        c
    }
}

fn var_index_checks(p: &VarIndexParams, r: &VarIndexReport, metrics: &mut Vec<Metric>) -> Vec<Check> {
    let mut checks = Vec::new();
    for (i, q) in r.p_grid.iter().enumerate() {
        metrics.push(metric(format!("growth_ratio[p={}]", format_f64(*q)), r.growth_ratios[i]));
    }
    metrics.push(metric("v_hat", r.v_hat.unwrap_or(f64::NAN)));
    metrics.push(metric("dropped", r.dropped as f64));
    for (want, list) in [(VarVerdict::Finite, &p.finite_at), (VarVerdict::Infinite, &p.infinite_at)] {
        for q in list.iter() {
            let got = r.verdict_at(*q);
            let check = match got {
                Some(v) if v == want => Check::new(format!("{} at p={q}", want.as_str()), true, v.as_str()),
                Some(VarVerdict::Inconclusive) => Check {
                    name: format!("{} at p={q}", want.as_str()),
                    outcome: Outcome::Inconclusive,
                    detail: "inconclusive".into(),
                },
                other => Check::new(format!("{} at p={q}", want.as_str()), false, format!("{other:?}")),
            };
            checks.push(check);
        }
    }
    if let Some(g) = p.min_growth_at_infinite {
        for q in &p.infinite_at {
            if let Some(i) = r.p_grid.iter().position(|x| x == q) {
                let v = r.growth_ratios[i];
                checks.push(Check::new(format!("growth ratio at p={q} >= {g}"), v >= g, format_f64(v)));
            }
        }
    }
    if let (Some(t), Some(tol)) = (p.target, p.target_tol) {
        let ok = r.v_hat.is_some_and(|v| (v - t).abs() <= tol);
        checks.push(Check::new(format!("v_hat = {t} +- {tol}"), ok, format!("{:?}", r.v_hat)));
    }
    checks
}

fn var_index_run<F>(ctx: &Ctx<'_>, p: &VarIndexParams, inputs: Value, sampler: F, example: Option<SampleFn>) -> Result<RunOutput>
where
    F: Fn(&GridSpec, &mut RandomState) -> Result<Vec<Vec<f64>>> + Sync,
{
    let r = variation_index_estimate(&sampler, &p.index_config(ctx), ctx.seed, &p.model)?;
    let mut metrics = Vec::new();
    let checks = var_index_checks(p, &r, &mut metrics);
    let mut out = output(inputs, metrics, checks);
    out.artifacts.push(Artifact::Text("varindex.csv".into(), r.to_csv()));
    out.artifacts.push(Artifact::Text("varindex.json".into(), serde_json::to_string_pretty(&r)?));
    if let Some(f) = example {
        let grid = GridSpec::new(p.horizon, *p.levels.last().unwrap())?;
        out.artifacts.push(Artifact::Path("path-0".into(), f(&grid, &mut RandomState::derive(ctx.seed, &p.model, 0))?));
    }
    Ok(out)
}

type SampleFn = Box<dyn Fn(&GridSpec, &mut RandomState) -> Result<crate::paths::SamplePath>>;

fn levy_var_index(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (VarIndexParams, _) = parse(params)?;
    let model = ctx.config.model(&p.model)?;
    let levy = model.levy.clone().ok_or_else(|| invalid(format!("{} is not a Levy model", p.model)))?;
    let lv = levy.clone();
    var_index_run(
        ctx,
        &p,
        inputs,
        move |g: &GridSpec, r: &mut RandomState| Ok(simulate_levy(&levy, g, r)?.values),
        Some(Box::new(move |g: &GridSpec, r: &mut RandomState| simulate_levy(&lv, g, r))),
    )
}

fn stable_dichotomy(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    levy_var_index(ctx, params)
}

fn bm_index(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    levy_var_index(ctx, params)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BnsExpParams {
    #[serde(flatten)]
    index: VarIndexParams,
    bns: BnsParams,
    /// Gamma subordinator driving the variance.
    sub_shape: f64,
    sub_rate: f64,
}

impl Default for BnsExpParams {
    fn default() -> Self {
        Self {
            index: VarIndexParams { model: "bns".into(), ..VarIndexParams::bm() },
            bns: BnsParams { alpha: 1.0, mu: 0.0, b: -0.5, sigma0_sq: 1.0 },
            sub_shape: 1.0,
            sub_rate: 1.0,
        }
    }
}

fn bns_gvar(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (BnsExpParams, _) = parse(params)?;
    let sub = LevyModel::gamma_subordinator(p.sub_shape, p.sub_rate)?;
    let (s2, b2) = (sub.clone(), p.bns.clone());
    let bns = p.bns.clone();
    var_index_run(
        ctx,
        &p.index,
        inputs,
        move |g: &GridSpec, r: &mut RandomState| Ok(simulate_bns(&sub, &bns, g, r)?.values),
        Some(Box::new(move |g: &GridSpec, r: &mut RandomState| simulate_bns(&s2, &b2, g, r))),
    )
}

// ------------------------------------------------------------ symbol indices

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StableLikeParams {
    model: String,
    x: f64,
    unif_target: f64,
    loc_target: f64,
    tol: f64,
    #[serde(default)]
    grid: Option<GridConfig>,
}

impl Default for StableLikeParams {
    fn default() -> Self {
        Self { model: "stablelike".into(), x: 0.0, unif_target: 1.0, loc_target: 0.6, tol: 0.05, grid: None }
    }
}

fn stablelike_index(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (StableLikeParams, _) = parse(params)?;
    let m = ctx.config.model(&p.model)?;
    let g = p.grid.clone().unwrap_or_else(|| ctx.config.grid_for(m.dim()));
    let unif = index_beta_inf_unif(&m.symbol, &m.symbol.default_domain(), &g)?;
    let loc = index_beta_loc(&m.symbol, &[p.x], &g)?;
    Ok(output(
        inputs,
        vec![metric("beta_unif", unif.value), metric("beta_loc", loc.value), metric("beta_unif_residual", unif.residual_rms)],
        vec![
            Check::new("beta_unif", (unif.value - p.unif_target).abs() <= p.tol, format_f64(unif.value)),
            Check::new("beta_loc", (loc.value - p.loc_target).abs() <= p.tol, format_f64(loc.value)),
        ],
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GbmMcParams {
    model: String,
    x: f64,
    xi: f64,
    t: f64,
    n: usize,
    radius: f64,
    level: u32,
    antithetic: bool,
    target: f64,
    tol: f64,
}

impl Default for GbmMcParams {
    fn default() -> Self {
        Self {
            model: "gbm".into(),
            x: 1.0,
            xi: 2.0,
            t: 1e-4,
            n: 200_000,
            radius: 1.0,
            level: 1,
            antithetic: true,
            target: 2.0,
            tol: 0.2,
        }
    }
}

fn gbm_symbol_mc(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (GbmMcParams, _) = parse(params)?;
    let m = ctx.config.model(&p.model)?;
    let cfg = McConfig::new(p.n, p.level, ctx.seed).antithetic(p.antithetic);
    let q = mc_symbol_estimate(m.sampler.as_ref(), &[p.x], &[p.xi], p.t, p.radius, &cfg)?;
    let exact = m.symbol.eval(&[p.x], &[p.xi])?;
    let err = (q.value - Complex64::new(p.target, 0.0)).norm();
    Ok(output(
        inputs,
        vec![
            metric("estimate_re", q.value.re),
            metric("estimate_im", q.value.im),
            metric("se_re", q.se_re),
            metric("se_im", q.se_im),
            metric("symbol_re", exact.re),
            metric("abs_error", err),
        ],
        vec![Check::new(format!("|q_hat - {}| <= {}", p.target, p.tol), err <= p.tol, format_f64(err))],
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GbmIndexParams {
    model: String,
    tol: f64,
    /// Scale at which the uniform functional is probed for unboundedness.
    radius: f64,
}

impl Default for GbmIndexParams {
    fn default() -> Self {
        Self { model: "gbm".into(), tol: 0.05, radius: 2f64.powi(-8) }
    }
}

fn gbm_indices(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (GbmIndexParams, _) = parse(params)?;
    let m = ctx.config.model(&p.model)?;
    let g = ctx.config.grid_for(1);
    let s1 = index_spot(&m.symbol, &[1.0], &g)?;
    let s0 = index_spot(&m.symbol, &[0.0], &g)?;
    let dom = m.symbol.default_domain();
    let h = h_uniform(&m.symbol, p.radius, &dom, &g)?;
    let u1 = index_beta_inf_unif1(&m.symbol, &dom, &g)?;
    Ok(output(
        inputs,
        vec![
            metric("spot_x1", s1.value),
            metric("spot_x0", s0.value),
            metric("h_uniform", h.value),
            metric("h_uniform_unbounded", if h.unbounded { 1.0 } else { 0.0 }),
            metric("beta_unif1", u1.value),
        ],
        vec![
            Check::new("spot index at x=1 is 2", (s1.value - 2.0).abs() <= p.tol, format_f64(s1.value)),
            Check::new("spot index at x=0 is 0", s0.value.abs() <= p.tol, format_f64(s0.value)),
            Check::new("H_uniform unbounded", h.unbounded, format!("probe {:?}", h.probe)),
        ],
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SandwichParams {
    /// Empty means every model of the config.
    models: Vec<String>,
    tol: f64,
}

impl Default for SandwichParams {
    fn default() -> Self {
        Self { models: Vec::new(), tol: 0.05 }
    }
}

fn index_sandwich(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (SandwichParams, _) = parse(params)?;
    let names = if p.models.is_empty() { ctx.config.model_names() } else { p.models.clone() };
    let mut metrics = Vec::new();
    let mut checks = Vec::new();
    let mut covered = 0;
    for name in names {
        let m = ctx.config.model(&name)?;
        let g = ctx.config.grid_for(m.dim());
        let dom = m.symbol.default_domain();
        let unif = index_beta_inf_unif(&m.symbol, &dom, &g)?;
        if unif.unbounded {
            metrics.push(metric(format!("{name}.beta_unif"), f64::INFINITY));
            continue;
        }
        covered += 1;
        let u1 = index_beta_inf_unif1(&m.symbol, &dom, &g)?;
        let loc = index_beta_loc(&m.symbol, &vec![0.0; m.dim()], &g)?;
        metrics.push(metric(format!("{name}.beta_loc"), loc.value));
        metrics.push(metric(format!("{name}.beta_unif1"), u1.value));
        metrics.push(metric(format!("{name}.beta_unif"), unif.value));
        let ok = loc.value <= u1.value + p.tol && u1.value <= unif.value + p.tol;
        checks.push(Check::new(
            format!("{name}: loc <= unif1 <= unif"),
            ok,
            format!("{} <= {} <= {}", format_f64(loc.value), format_f64(u1.value), format_f64(unif.value)),
        ));
    }
    metrics.push(metric("models_covered", covered as f64));
    Ok(output(inputs, metrics, checks))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferParams {
    model: String,
    projection: String,
    projection_alpha: f64,
    tol: f64,
    #[serde(default)]
    grid: Option<GridConfig>,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self { model: "transfer".into(), projection: "projection".into(), projection_alpha: 1.2, tol: 0.05, grid: None }
    }
}

fn sde_transfer(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (TransferParams, _) = parse(params)?;
    let m = ctx.config.model(&p.model)?;
    let driver = match &m.def {
        crate::registry::ModelDef::Sde { driver, .. } => {
            driver.levy("driver")?.ok_or_else(|| invalid("SDE driver must be a Levy model"))?
        }
        _ => return Err(invalid(format!("{} is not an SDE model", p.model))),
    };
    let beta1 = driver.classical_indices().beta1;
    let g = p.grid.clone().unwrap_or_else(|| ctx.config.grid_for(m.dim()));
    let est = index_beta_inf_unif(&m.symbol, &m.symbol.default_domain(), &g)?;
    let proj = ctx.config.model(&p.projection)?;
    let gp = p.grid.clone().unwrap_or_else(|| ctx.config.grid_for(proj.dim()));
    let pe = index_beta_inf_unif(&proj.symbol, &proj.symbol.default_domain(), &gp)?;
    let want = p.projection_alpha.max(1.0);
    Ok(output(
        inputs,
        vec![metric("driver_beta1", beta1), metric("beta_unif", est.value), metric("projection_beta_unif", pe.value)],
        vec![
            Check::new("beta_unif(X) = beta1(Z)", (est.value - beta1).abs() <= p.tol, format_f64(est.value)),
            Check::new("projection index = max(1, alpha)", (pe.value - want).abs() <= p.tol, format_f64(pe.value)),
        ],
    ))
}

// ----------------------------------------------------------------- D and h

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DParams {
    alpha: f64,
    scale: f64,
    lambda_diverge: f64,
    lambda_converge: f64,
    rel_tol: f64,
}

impl Default for DParams {
    fn default() -> Self {
        Self { alpha: 1.2, scale: 1.0, lambda_diverge: 1.0, lambda_converge: 1.5, rel_tol: 1e-6 }
    }
}

/// `int (1 - e^{-|y|^lambda}) c |y|^{-1-alpha} dy` in closed form, `lambda > alpha`.
fn stable_d_closed_form(alpha: f64, scale: f64, lambda: f64) -> f64 {
    let c = gamma(1.0 + alpha) * (std::f64::consts::PI * alpha / 2.0).sin() / std::f64::consts::PI;
    2.0 * scale * c * gamma(1.0 - alpha / lambda) / alpha
}

fn d_dichotomy(_ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (DParams, _) = parse(params)?;
    let spec = JumpSpec::symmetric_stable(p.alpha, p.scale);
    let lo = d_integral_jumps(&spec, p.lambda_diverge)?;
    let hi = d_integral_jumps(&spec, p.lambda_converge)?;
    let oracle = stable_d_closed_form(p.alpha, p.scale, p.lambda_converge);
    let rel = (hi.value - oracle).abs() / oracle;
    Ok(output(
        inputs,
        vec![
            metric("d_low_lambda_lower_bound", lo.lower_bound.unwrap_or(lo.value)),
            metric("d_high_lambda", hi.value),
            metric("oracle", oracle),
            metric("rel_error", rel),
        ],
        vec![
            Check::new("diverges below alpha", lo.verdict == Verdict::Diverges, format!("{:?}", lo.verdict)),
            Check::new("converges above alpha", hi.verdict == Verdict::Converges, format!("{:?}", hi.verdict)),
            Check::new("matches oracle", rel <= p.rel_tol, format_f64(rel)),
        ],
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HTrendParams {
    model: String,
    times: Vec<f64>,
    lambda_diverge: f64,
    lambda_converge: f64,
    n: usize,
    radius: f64,
    level: u32,
    min_growth: f64,
    /// Stabilization: ratio of the last to the first value at most this.
    max_stable_ratio: f64,
    /// Stabilization: last value within `rel_tol * D + 3 SE` of `D`.
    rel_tol: f64,
}

impl Default for HTrendParams {
    fn default() -> Self {
        Self {
            model: "stable-1.2".into(),
            times: vec![1e-2, 1e-3, 1e-4],
            lambda_diverge: 0.8,
            lambda_converge: 1.5,
            n: 2_000_000,
            radius: 1.0,
            level: 1,
            min_growth: 3.0,
            max_stable_ratio: 1.5,
            rel_tol: 0.1,
        }
    }
}

fn h_trend(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (HTrendParams, _) = parse(params)?;
    if p.times.len() < 2 {
        return Err(invalid("need at least two times"));
    }
    let m = ctx.config.model(&p.model)?;
    let levy = m.levy.clone().ok_or_else(|| invalid("h-trend needs a Levy model"))?;
    let sampler = LevySampler { model: levy.clone() };
    let cfg = McConfig::new(p.n, p.level, ctx.seed).antithetic(levy.noise_is_symmetric());
    let x = vec![0.0; m.dim()];
    let mut metrics = Vec::new();
    let mut series = |lambda: f64| -> Result<Vec<(f64, f64)>> {
        p.times
            .iter()
            .map(|t| {
                let e = mc_h_estimate(&sampler, &x, lambda, *t, p.radius, &cfg)?;
                metrics.push(metric(format!("h[lambda={},t={}]", format_f64(lambda), format_f64(*t)), e.value));
                metrics.push(metric(format!("se[lambda={},t={}]", format_f64(lambda), format_f64(*t)), e.se));
                Ok((e.value, e.se))
            })
            .collect()
    };
    let low = series(p.lambda_diverge)?;
    let high = series(p.lambda_converge)?;
    let d = d_integral_jumps(&levy.triplet().jumps, p.lambda_converge)?;
    metrics.push(metric("d_integral", d.value));
    let growth = low.last().unwrap().0 / low[0].0;
    let ratio = high.last().unwrap().0 / high[0].0;
    let (last, se) = *high.last().unwrap();
    let gap = (last - d.value).abs();
    metrics.push(metric("growth_low_lambda", growth));
    metrics.push(metric("ratio_high_lambda", ratio));
    Ok(output(
        inputs,
        metrics,
        vec![
            Check::new(format!("growth >= {}", p.min_growth), growth >= p.min_growth, format_f64(growth)),
            Check::new(format!("ratio <= {}", p.max_stable_ratio), ratio <= p.max_stable_ratio, format_f64(ratio)),
            Check::new(
                "last value near D",
                d.verdict == Verdict::Converges && gap <= p.rel_tol * d.value + 3.0 * se,
                format!("|{} - {}| vs {}", format_f64(last), format_f64(d.value), format_f64(p.rel_tol * d.value + 3.0 * se)),
            ),
        ],
    ))
}

// ------------------------------------------------------------ process models

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CogarchExpParams {
    params: CogarchParams,
    rate: f64,
    jump_std: f64,
    horizon: f64,
    level: u32,
    n_paths: usize,
    rel_tol: f64,
    /// Levels of the refinement check on `V^1(G)`.
    levels: Vec<u32>,
    max_growth: f64,
}

impl Default for CogarchExpParams {
    fn default() -> Self {
        Self {
            params: CogarchParams { delta: 0.9, lambda: 0.05, b: 0.1, sigma0_sq: 0.5 },
            rate: 5.0,
            jump_std: 0.5,
            horizon: 1.0,
            level: 12,
            n_paths: 20,
            rel_tol: 1e-8,
            levels: (6..=12).collect(),
            max_growth: 1.1,
        }
    }
}

fn cogarch(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (CogarchExpParams, _) = parse(params)?;
    let l = LevyModel::compound_poisson(p.rate, JumpDist::Normal { mean: 0.0, std: p.jump_std, axis: 0 })?;
    let grid = GridSpec::new(p.horizon, p.level)?;
    let finest = *p.levels.iter().max().ok_or_else(|| invalid("levels must be nonempty"))?;
    let coarsest = *p.levels.iter().min().unwrap();
    if finest > p.level {
        return Err(invalid("refinement levels exceed the simulation level"));
    }
    let rows: Vec<(f64, f64, crate::paths::SamplePath)> = (0..p.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomState::derive(ctx.seed, "cogarch", i as u64);
            let path = simulate_cogarch(&l, &p.params, &grid, &mut rng)?;
            let closed = cogarch_closed_form_variance(path.jumps.as_deref().unwrap_or(&[]), &p.params, &path.times)?;
            let rel = path
                .values
                .iter()
                .zip(&closed)
                .map(|(v, c)| (v[1] - c).abs() / c.abs().max(1e-300))
                .fold(0.0, f64::max);
            let g: Vec<Vec<f64>> = path.values.iter().map(|v| vec![v[0]]).collect();
            let v1 = |k: u32| -> Result<f64> {
                let sub: Vec<Vec<f64>> = g.iter().step_by(1 << (p.level - k)).cloned().collect();
                Ok(pvar_exact(&sub, 1.0)?.value)
            };
            let (a, b) = (v1(finest)?, v1(coarsest)?);
            let growth = if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 1.0 };
            Ok((rel, growth, path))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let growth = median(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let mut out = output(
        inputs,
        vec![metric("max_rel_error", worst), metric("median_v1_growth", growth)],
        vec![
            Check::new("closed form", worst <= p.rel_tol, format_f64(worst)),
            Check::new("V^1(G) bounded under refinement", growth <= p.max_growth, format_f64(growth)),
        ],
    );
    if let Some(r) = rows.into_iter().next() {
        out.artifacts.push(Artifact::Path("path-0".into(), r.2));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GouParams {
    gamma: f64,
    sigma: f64,
    x0: f64,
    horizon: f64,
    level: u32,
    n_paths: usize,
    n_se: f64,
}

impl Default for GouParams {
    fn default() -> Self {
        Self { gamma: 1.0, sigma: 1.0, x0: 0.0, horizon: 1.0, level: 10, n_paths: 10_000, n_se: 3.0 }
    }
}

fn gou_gaussian(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (GouParams, _) = parse(params)?;
    // dX = (X - 0) d(-gamma t) + sigma dW
    let joint = LevyModel::product(
        "gou-driver",
        &[LevyModel::drift_only(vec![-p.gamma])?, LevyModel::brownian(p.sigma)],
    )?;
    let grid = GridSpec::new(p.horizon, p.level)?;
    let ends: Vec<f64> = (0..p.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomState::derive(ctx.seed, "gou", i as u64);
            Ok(simulate_gou(&joint, 0.0, p.x0, &grid, &mut rng)?.last()[0])
        })
        .collect::<Result<_>>()?;
    let (mean, _) = mean_and_se(&ends);
    let sq: Vec<f64> = ends.iter().map(|x| (x - mean).powi(2)).collect();
    let (var_biased, se) = mean_and_se(&sq);
    let n = ends.len() as f64;
    let var = var_biased * n / (n - 1.0);
    let exact = p.sigma * p.sigma * (1.0 - (-2.0 * p.gamma * p.horizon).exp()) / (2.0 * p.gamma);
    let mut out = output(
        inputs,
        vec![metric("var", var), metric("se", se), metric("exact", exact), metric("mean", mean)],
        vec![Check::new("Var(X_T) within n_se SE", (var - exact).abs() <= p.n_se * se, format!("{} vs {}", format_f64(var), format_f64(exact)))],
    );
    out.artifacts.push(Artifact::Path(
        "path-0".into(),
        simulate_gou(&joint, 0.0, p.x0, &grid, &mut RandomState::derive(ctx.seed, "gou", 0))?,
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CantorParams {
    n_min: u32,
    n_max: u32,
    lo: f64,
    hi: f64,
}

impl Default for CantorParams {
    fn default() -> Self {
        Self { n_min: 5, n_max: 15, lo: 1.45, hi: 1.55 }
    }
}

/// Ratio `q_{n+1} / q_n` is reported at index `n`.
fn cantor(_ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (CantorParams, _) = parse(params)?;
    if p.n_min == 0 || p.n_min > p.n_max {
        return Err(invalid("need 1 <= n_min <= n_max"));
    }
    let rows = cantor_divergence(p.n_max + 1)?;
    let mut metrics = Vec::new();
    let mut checks = Vec::new();
    let mut csv = String::from("n,f,quotient\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{}\n", r.n, format_f64(r.f), format_f64(r.quotient)));
    }
    for n in p.n_min..=p.n_max {
        let ratio = rows[n as usize].quotient / rows[n as usize - 1].quotient;
        metrics.push(metric(format!("ratio[n={n}]"), ratio));
        checks.push(Check::new(format!("ratio at n={n} in [{}, {}]", p.lo, p.hi), p.lo <= ratio && ratio <= p.hi, format_f64(ratio)));
    }
    let mut out = output(inputs, metrics, checks);
    out.artifacts.push(Artifact::Text("quotients.csv".into(), csv));
    Ok(out)
}

// ---------------------------------------------------------------- determinism

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeterminismParams {
    /// Empty means every other experiment, each in quick mode.
    ids: Vec<String>,
    workers: Vec<usize>,
}

impl Default for DeterminismParams {
    fn default() -> Self {
        Self { ids: Vec::new(), workers: vec![1, 4] }
    }
}

fn determinism(ctx: &Ctx<'_>, params: Value) -> Result<RunOutput> {
    let (p, inputs): (DeterminismParams, _) = parse(params)?;
    let ids: Vec<String> = if p.ids.is_empty() {
        EXPERIMENT_IDS.iter().filter(|id| **id != "determinism").map(|s| s.to_string()).collect()
    } else {
        p.ids.clone()
    };
    if ids.iter().any(|id| id == "determinism") {
        return Err(invalid("determinism cannot include itself"));
    }
    let mut metrics = Vec::new();
    let mut checks = Vec::new();
    for id in &ids {
        let mut prints = Vec::new();
        // first worker count twice, then each other one
        let mut runs = vec![p.workers[0]];
        runs.extend(p.workers.iter().copied());
        for w in runs {
            let opts = RunOptions {
                config: ctx.config.clone(),
                seed: Some(ctx.seed),
                workers: w,
                out: None,
                quick: true,
                overrides: None,
            };
            prints.push(super::run_experiment(id, &opts)?.fingerprint());
        }
        let same = prints.iter().all(|f| *f == prints[0]);
        metrics.push(metric(format!("{id}.identical"), if same { 1.0 } else { 0.0 }));
        checks.push(Check::new(format!("{id} bit-identical"), same, format!("{} runs, workers {:?}", prints.len(), p.workers)));
    }
    Ok(output(inputs, metrics, checks))
}
