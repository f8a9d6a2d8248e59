//! Samplers for stochastic exponentials, stable-like chains, generalized OU,
//! BNS and COGARCH models.

use rand_distr::StandardNormal;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use super::levy_path::simulate_levy_from;
use super::sde::euler_on_driver;
use super::{GridSpec, JumpEvent, PathSampler, PathStatus, SamplePath};
use crate::error::{check_finite, invalid, Error, Result};
use crate::levy::stable::standard_symmetric_stable;
use crate::levy::{JumpDist, JumpSpec, LevyModel};
use crate::rng::RandomState;
use crate::symbols::state::CoefficientField;

/// Doleans-Dade exponential of a scalar driver path whose continuous martingale
/// part has variance `sigma2` per unit time.
pub fn stochastic_exponential(driver: &SamplePath, sigma2: f64) -> Result<SamplePath> {
    if driver.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: driver.dim() });
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(invalid("sigma2 must be finite and >= 0"));
    }
    let mut jump_sum = 0.0;
    let mut product = 1.0;
    let mut values = Vec::with_capacity(driver.len());
    for (i, (&t, v)) in driver.times.iter().zip(&driver.values).enumerate() {
        if i > 0 {
            for j in driver.jumps_in(driver.times[i - 1], t) {
                let dz = j.jump[0];
                if dz < -1.0 {
                    log::warn!("jump {dz} < -1 at t = {}: exponential changes sign", j.time);
                }
                jump_sum += dz;
                product *= 1.0 + dz;
            }
        }
        let cont = v[0] - driver.values[0][0] - jump_sum;
        values.push(vec![(cont - 0.5 * sigma2 * t).exp() * product]);
    }
    Ok(SamplePath {
        times: driver.times.clone(),
        values,
        scheme: format!("stochastic-exponential[{}]", driver.scheme),
        seed: driver.seed,
        jumps: None,
        status: driver.status,
    })
}

pub type AFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Markov chain with steps `h^{1/(2a(x))} S`, `S` standard symmetric `2a(x)`-stable.
#[derive(Clone)]
pub struct StableLikeSampler {
    pub label: String,
    pub a: AFn,
}

impl fmt::Debug for StableLikeSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StableLikeSampler({})", self.label)
    }
}

impl StableLikeSampler {
    pub fn new(label: impl Into<String>, a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            a: Arc::new(a),
        }
    }
}

pub fn simulate_stable_like(
    a: &(dyn Fn(f64) -> f64 + Send + Sync),
    x0: f64,
    grid: &GridSpec,
    rng: &mut RandomState,
    mirror: bool,
) -> Result<SamplePath> {
    check_finite("x0", &[x0])?;
    let h = grid.dt();
    let sign = if mirror { -1.0 } else { 1.0 };
    let mut x = x0;
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(vec![x]);
    for _ in 0..grid.steps() {
        let ax = a(x);
        if !(ax > 0.0 && ax < 1.0) {
            return Err(invalid(format!("a({x}) = {ax} outside (0, 1)")));
        }
        let alpha = 2.0 * ax;
        x += sign * h.powf(1.0 / alpha) * standard_symmetric_stable(alpha, rng);
        values.push(vec![x]);
    }
    Ok(SamplePath {
        times: grid.times(),
        values,
        scheme: "stable-like-chain".into(),
        seed: rng.seed(),
        jumps: None,
        status: PathStatus::Complete,
    })
}

impl PathSampler for StableLikeSampler {
    fn dim(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn sample_from(&self, x0: &[f64], grid: &GridSpec, rng: &mut RandomState, mirror: bool) -> Result<SamplePath> {
        if x0.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: x0.len() });
        }
        simulate_stable_like(self.a.as_ref(), x0[0], grid, rng, mirror)
    }

    fn supports_mirror(&self) -> bool {
        true
    }
}

/// `dX = (X- - m) dU + dL` with `(U, L)` the two coordinates of `joint`
/// (Euler scheme, jumps at their recorded times).
pub fn simulate_gou(joint: &LevyModel, m: f64, x0: f64, grid: &GridSpec, rng: &mut RandomState) -> Result<SamplePath> {
    if joint.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: joint.dim() });
    }
    let phi = CoefficientField::new("gou", 1, 2, move |x| vec![vec![x[0] - m, 1.0]]);
    let z = simulate_levy_from(joint, &[0.0, 0.0], grid, rng, false)?;
    let mut p = euler_on_driver(&phi, &[x0], &z)?;
    p.scheme = format!("gou-euler[{}]", joint.label);
    p.seed = rng.seed();
    Ok(p)
}

/// Exact transition sampling of `dX = -gamma (X - m) dt + sigma dW`.
pub fn gaussian_ou_exact(
    gamma: f64,
    sigma: f64,
    m: f64,
    x0: f64,
    grid: &GridSpec,
    rng: &mut RandomState,
) -> Result<SamplePath> {
    check_finite("ou parameters", &[gamma, sigma, m, x0])?;
    let h = grid.dt();
    let decay = (-gamma * h).exp();
    let sd = if gamma == 0.0 {
        sigma * h.sqrt()
    } else {
        sigma * ((1.0 - (-2.0 * gamma * h).exp()) / (2.0 * gamma)).sqrt()
    };
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(vec![x0]);
    let mut x = x0;
    for _ in 0..grid.steps() {
        let z: f64 = if sd > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        x = m + (x - m) * decay + sd * z;
        values.push(vec![x]);
    }
    SamplePath::new(grid.times(), values, "gaussian-ou-exact", rng.seed())
}

/// Mean and variance of the Gaussian OU at time `t`, from
/// `X_t = m(1 - e^{-gamma t}) + x e^{-gamma t} + sigma e^{-gamma t} W_{(e^{2 gamma t} - 1)/(2 gamma)}`.
pub fn gaussian_ou_moments(gamma: f64, sigma: f64, m: f64, x0: f64, t: f64) -> (f64, f64) {
    let e = (-gamma * t).exp();
    let clock = if gamma == 0.0 {
        t
    } else {
        ((2.0 * gamma * t).exp() - 1.0) / (2.0 * gamma)
    };
    (m * (1.0 - e) + x0 * e, sigma * sigma * e * e * clock)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnsParams {
    /// Mean-reversion rate `alpha >= 0`.
    pub alpha: f64,
    pub mu: f64,
    pub b: f64,
    pub sigma0_sq: f64,
}

/// BNS model, coordinates `(t, sigma^2, G)`. The subordinator runs at speed
/// `alpha`; `sigma^2` decays exactly between grid points and recorded jumps,
/// `G` uses Euler-Maruyama with the left-point volatility.
pub fn simulate_bns(
    subordinator: &LevyModel,
    params: &BnsParams,
    grid: &GridSpec,
    rng: &mut RandomState,
) -> Result<SamplePath> {
    if subordinator.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: subordinator.dim() });
    }
    let BnsParams { alpha, sigma0_sq, .. } = *params;
    if !(alpha >= 0.0 && sigma0_sq >= 0.0) {
        return Err(invalid("BNS needs alpha >= 0 and sigma0_sq >= 0"));
    }
    if subordinator.triplet().has_gaussian()
        || subordinator.plain_drift()[0] < 0.0
        || !nonnegative_jumps(&subordinator.triplet().jumps)
    {
        return Err(invalid("BNS driver must be a subordinator"));
    }
    let sub_path = if alpha > 0.0 {
        Some(simulate_levy_from(&subordinator.time_scaled(alpha)?, &[0.0], grid, rng, false)?)
    } else {
        None
    };
    let w: Vec<f64> = (0..grid.steps()).map(|_| rng.sample::<f64, _>(StandardNormal) * grid.dt().sqrt()).collect();
    let mut p = bns_from_drivers(sub_path.as_ref(), &w, params, grid)?;
    p.seed = rng.seed();
    Ok(p)
}

fn nonnegative_jumps(j: &JumpSpec) -> bool {
    match j {
        JumpSpec::None | JumpSpec::GammaSubordinator { .. } => true,
        JumpSpec::CompoundPoisson { jump, .. } => match jump {
            JumpDist::Dirac { jump } => jump[0] >= 0.0,
            JumpDist::Exponential { .. } => true,
            JumpDist::Normal { std, mean, .. } => *std == 0.0 && *mean >= 0.0,
        },
        JumpSpec::FiniteAtomic { atoms } => atoms.iter().all(|a| a.jump[0] >= 0.0),
        JumpSpec::SymmetricStable { .. } => false,
        JumpSpec::Sum { parts } => parts.iter().all(nonnegative_jumps),
    }
}

pub(crate) fn bns_from_drivers(
    sub: Option<&SamplePath>,
    dw: &[f64],
    params: &BnsParams,
    grid: &GridSpec,
) -> Result<SamplePath> {
    let BnsParams { alpha, mu, b, sigma0_sq } = *params;
    let h = grid.dt();
    let decay = (-alpha * h).exp();
    let (mut s2, mut g) = (sigma0_sq, 0.0);
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(vec![0.0, s2, 0.0]);
    for i in 1..=grid.steps() {
        let (t0, t1) = (grid.time(i - 1), grid.time(i));
        g += (mu + b * s2) * h + s2.sqrt() * dw[i - 1];
        let mut next = s2 * decay;
        if let Some(sp) = sub {
            let mut rest = sp.values[i][0] - sp.values[i - 1][0];
            for j in sp.jumps_in(t0, t1) {
                next += j.jump[0] * (-alpha * (t1 - j.time)).exp();
                rest -= j.jump[0];
            }
            // unrecorded (infinite-activity or drift) part enters at mid-step
            next += rest * (-alpha * h / 2.0).exp();
        }
        if !(next >= 0.0) {
            return Err(Error::Internal(format!("negative variance {next} at t = {t1}")));
        }
        s2 = next;
        values.push(vec![t1, s2, g]);
    }
    SamplePath::new(grid.times(), values, "bns", 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CogarchParams {
    pub delta: f64,
    pub lambda: f64,
    pub b: f64,
    pub sigma0_sq: f64,
}

impl CogarchParams {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lambda >= 0.0 && self.b > 0.0 && self.sigma0_sq >= 0.0) {
            return Err(invalid("COGARCH needs lambda >= 0, b > 0, sigma0_sq >= 0"));
        }
        Ok(())
    }
}

/// `sigma^2` after flowing `s` time units along `d sigma^2 = (b + log(delta) sigma^2) dt`.
fn cogarch_flow(s2: f64, s: f64, p: &CogarchParams) -> f64 {
    let ld = p.delta.ln();
    let fixed = -p.b / ld;
    fixed + (s2 - fixed) * p.delta.powf(s)
}

/// COGARCH(1,1), coordinates `(G, sigma^2)`. Jump-exact: `sigma^2` follows the
/// ODE between jumps of `L` and is multiplied by `1 + (lambda/delta) dL^2` at
/// each jump; `G` gains `sigma_- dL` per jump and an Euler term for the
/// continuous part of `L`. The returned path carries the jump record of `L`.
pub fn simulate_cogarch(l: &LevyModel, params: &CogarchParams, grid: &GridSpec, rng: &mut RandomState) -> Result<SamplePath> {
    params.validate()?;
    if l.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: l.dim() });
    }
    if !l.triplet().jumps.is_finite_activity() {
        return Err(Error::Unsupported("COGARCH driver needs finite-activity jumps".into()));
    }
    let lp = simulate_levy_from(l, &[0.0], grid, rng, false)?;
    let mut p = cogarch_from_driver(&lp, params)?;
    p.seed = rng.seed();
    Ok(p)
}

pub(crate) fn cogarch_from_driver(lp: &SamplePath, params: &CogarchParams) -> Result<SamplePath> {
    let mut s2 = params.sigma0_sq;
    let mut g = 0.0;
    let mut values = vec![vec![0.0, s2]];
    for i in 1..lp.len() {
        let (t0, t1) = (lp.times[i - 1], lp.times[i]);
        let mut cont = lp.values[i][0] - lp.values[i - 1][0];
        let jumps: Vec<&JumpEvent> = lp.jumps_in(t0, t1).collect();
        for j in &jumps {
            cont -= j.jump[0];
        }
        g += s2.sqrt() * cont;
        let mut t = t0;
        for j in jumps {
            s2 = cogarch_flow(s2, j.time - t, params);
            let dl = j.jump[0];
            g += s2.sqrt() * dl;
            s2 *= 1.0 + params.lambda / params.delta * dl * dl;
            t = j.time;
        }
        s2 = cogarch_flow(s2, t1 - t, params);
        values.push(vec![g, s2]);
    }
    let mut p = SamplePath::new(lp.times.clone(), values, "cogarch-jump-exact", lp.seed)?;
    p.jumps = lp.jumps.clone();
    Ok(p)
}

/// `sigma_t^2 = (b int_0^t e^{X_s} ds + sigma_0^2) e^{-X_{t-}}` with
/// `X_t = -t log(delta) - sum log(1 + (lambda/delta) dL^2)`, from a jump record.
pub fn cogarch_closed_form_variance(jumps: &[JumpEvent], params: &CogarchParams, times: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let kappa = -params.delta.ln();
    let mut out = Vec::with_capacity(times.len());
    let mut sorted: Vec<&JumpEvent> = jumps.iter().collect();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
    for &t in times {
        // integral of e^{X_s} over [0, t], piecewise between jumps
        let mut integral = 0.0;
        let mut x_left: f64 = 0.0; // X at the start of the current piece
        let mut a = 0.0;
        let mut jsum = 0.0;
        for j in sorted.iter().filter(|j| j.time < t) {
            integral += x_left.exp() * ((kappa * (j.time - a)).exp_m1()) / kappa;
            jsum += (params.lambda / params.delta * j.jump[0] * j.jump[0]).ln_1p();
            x_left = kappa * j.time - jsum;
            a = j.time;
        }
        integral += x_left.exp() * (kappa * (t - a)).exp_m1() / kappa;
        // no jump at grid times almost surely, so X_{t-} uses jumps before t
        let x_t = kappa * t - jsum;
        out.push((params.b * integral + params.sigma0_sq) * (-x_t).exp());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::simulate_levy;

    #[test]
    fn exponential_of_zero_and_brownian() {
        let g = GridSpec::new(1.0, 8).unwrap();
        let z = simulate_levy(&LevyModel::drift_only(vec![0.0]).unwrap(), &g, &mut RandomState::new(0)).unwrap();
        let e = stochastic_exponential(&z, 0.0).unwrap();
        assert!(e.values.iter().all(|v| v[0] == 1.0));
        let w = simulate_levy(&LevyModel::brownian(1.0), &g, &mut RandomState::new(1)).unwrap();
        let e = stochastic_exponential(&w, 1.0).unwrap();
        for ((t, v), wv) in e.times.iter().zip(&e.values).zip(&w.values) {
            assert!((v[0] - (wv[0] - t / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_single_jump() {
        let times = vec![0.0, 0.5, 1.0];
        let mut z = SamplePath::new(times, vec![vec![0.0], vec![0.0], vec![0.5]], "x", 0).unwrap();
        z.jumps = Some(vec![JumpEvent { time: 0.7, jump: vec![0.5] }]);
        let e = stochastic_exponential(&z, 0.0).unwrap();
        assert_eq!(e.coordinate(0), vec![1.0, 1.0, 1.5]);
    }

    #[test]
    fn exponential_solves_linear_sde() {
        // Euler residual of dX = X- dZ shrinks with the mesh
        let model = LevyModel::from_plain_drift(
            "jd",
            vec![0.1],
            vec![vec![0.04]],
            crate::levy::JumpSpec::CompoundPoisson {
                rate: 2.0,
                jump: JumpDist::Normal { mean: 0.0, std: 0.2, axis: 0 },
            },
        )
        .unwrap();
        let fine = simulate_levy(&model, &GridSpec::new(1.0, 14).unwrap(), &mut RandomState::new(8)).unwrap();
        let resid = |stride: usize| {
            let z = fine.subsample(stride);
            let e = stochastic_exponential(&z, 0.04).unwrap();
            let x = euler_on_driver(&CoefficientField::scalar_linear(), &[1.0], &z).unwrap();
            e.values.iter().zip(&x.values).map(|(a, b)| (a[0] - b[0]).abs()).fold(0.0, f64::max)
        };
        assert!(resid(1) < resid(64));
    }

    #[test]
    fn stable_like_rejects_bad_a() {
        let g = GridSpec::new(1.0, 4).unwrap();
        assert!(simulate_stable_like(&|_| 1.2, 0.0, &g, &mut RandomState::new(0), false).is_err());
        assert!(simulate_stable_like(&|_| 0.4, 0.0, &g, &mut RandomState::new(0), false).is_ok());
    }

    #[test]
    fn gou_special_cases() {
        let g = GridSpec::new(1.0, 10).unwrap();
        let p = gaussian_ou_exact(2.0, 0.0, 1.0, 3.0, &g, &mut RandomState::new(0)).unwrap();
        for (t, v) in p.times.iter().zip(&p.values) {
            assert!((v[0] - (1.0 + 2.0 * (-2.0 * t).exp())).abs() < 1e-12);
        }
        // gamma = 0: X = x + W
        let joint = LevyModel::product("u-l", &[LevyModel::drift_only(vec![0.0]).unwrap(), LevyModel::brownian(1.0)]).unwrap();
        let x = simulate_gou(&joint, 5.0, 0.3, &g, &mut RandomState::new(4)).unwrap();
        let z = simulate_levy(&joint, &g, &mut RandomState::new(4)).unwrap();
        for (xv, zv) in x.values.iter().zip(&z.values) {
            assert!((xv[0] - 0.3 - zv[1]).abs() < 1e-12);
        }
        let (m, v) = gaussian_ou_moments(1.0, 1.0, 0.0, 0.0, 1.0);
        assert_eq!(m, 0.0);
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn bns_special_cases() {
        let g = GridSpec::new(1.0, 8).unwrap();
        let none = LevyModel::drift_only(vec![0.0]).unwrap();
        let p = simulate_bns(&none, &BnsParams { alpha: 1.5, mu: 0.0, b: 0.0, sigma0_sq: 2.0 }, &g, &mut RandomState::new(1))
            .unwrap();
        for v in &p.values {
            assert!((v[1] - 2.0 * (-1.5 * v[0]).exp()).abs() < 1e-12);
        }
        let dw: Vec<f64> = (0..256).map(|i| ((i * 7919) % 13) as f64 / 100.0 - 0.06).collect();
        let p = bns_from_drivers(None, &dw, &BnsParams { alpha: 0.0, mu: 0.0, b: 0.0, sigma0_sq: 1.0 }, &g).unwrap();
        let mut w = 0.0;
        for (i, v) in p.values.iter().enumerate().skip(1) {
            w += dw[i - 1];
            assert_eq!(v[2], w);
        }
        let bm = LevyModel::brownian(1.0);
        assert!(simulate_bns(&bm, &BnsParams { alpha: 1.0, mu: 0.0, b: 0.0, sigma0_sq: 1.0 }, &g, &mut RandomState::new(1)).is_err());
    }

    fn cogarch_params() -> CogarchParams {
        CogarchParams { delta: 0.9, lambda: 0.5, b: 0.2, sigma0_sq: 0.3 }
    }

    #[test]
    fn cogarch_without_jumps_follows_ode() {
        let p = CogarchParams { lambda: 0.0, ..cogarch_params() };
        let g = GridSpec::new(2.0, 6).unwrap();
        let path = simulate_cogarch(&LevyModel::drift_only(vec![0.0]).unwrap(), &p, &g, &mut RandomState::new(0)).unwrap();
        let ld = p.delta.ln();
        for (t, v) in path.times.iter().zip(&path.values) {
            let exact = -p.b / ld + (p.sigma0_sq + p.b / ld) * p.delta.powf(*t);
            assert!((v[1] - exact).abs() < 1e-10);
        }
        assert!(simulate_cogarch(&LevyModel::brownian(1.0), &CogarchParams { delta: 1.0, ..p }, &g, &mut RandomState::new(0)).is_err());
    }

    #[test]
    fn cogarch_matches_closed_form() {
        let l = LevyModel::compound_poisson(4.0, JumpDist::Normal { mean: 0.0, std: 0.5, axis: 0 }).unwrap();
        let g = GridSpec::new(1.0, 8).unwrap();
        for seed in 0..5 {
            let path = simulate_cogarch(&l, &cogarch_params(), &g, &mut RandomState::new(seed)).unwrap();
            let cf = cogarch_closed_form_variance(path.jumps.as_ref().unwrap(), &cogarch_params(), &path.times).unwrap();
            for (v, c) in path.values.iter().zip(&cf) {
                assert!((v[1] - c).abs() <= 1e-8 * c.abs(), "{} vs {c}", v[1]);
            }
        }
    }
}
