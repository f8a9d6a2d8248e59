use rand_distr::{Distribution, Exp};

use super::{GridSpec, JumpEvent, PathSampler, PathStatus, SamplePath};
use crate::error::{check_finite, Error, Result};
use crate::levy::LevyModel;
use crate::rng::RandomState;

/// Levy path from the origin.
pub fn simulate_levy(model: &LevyModel, grid: &GridSpec, rng: &mut RandomState) -> Result<SamplePath> {
    simulate_levy_from(model, &vec![0.0; model.dim()], grid, rng, false)
}

/// Levy path from `x0`. Finite-activity jumps are placed at exact exponential
/// spacings and recorded; the other parts use exact grid increments.
pub fn simulate_levy_from(
    model: &LevyModel,
    x0: &[f64],
    grid: &GridSpec,
    rng: &mut RandomState,
    mirror: bool,
) -> Result<SamplePath> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    check_finite("x0", x0)?;
    if mirror && !model.noise_is_symmetric() {
        return Err(Error::Unsupported(format!("antithetic sampling of non-symmetric {}", model.label)));
    }
    let sign = if mirror { -1.0 } else { 1.0 };
    let jumps_spec = &model.triplet().jumps;
    let rate = jumps_spec.finite_rate();
    let horizon = grid.horizon;
    let mut events = Vec::new();
    if rate > 0.0 {
        let exp = Exp::new(rate).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += exp.sample(rng);
            if t > horizon {
                break;
            }
            let jump: Vec<f64> = jumps_spec.sample_finite_mark(d, rng).into_iter().map(|v| sign * v).collect();
            events.push(JumpEvent { time: t, jump });
        }
    }
    let n = grid.steps();
    let dt = grid.dt();
    let b0 = model.plain_drift();
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    values.push(x.clone());
    let mut next = 0;
    for i in 1..=n {
        let t = grid.time(i);
        let noise = model.sample_noise(dt, false, rng);
        for k in 0..d {
            x[k] += b0[k] * dt + sign * noise[k];
        }
        while next < events.len() && events[next].time <= t {
            for (xk, j) in x.iter_mut().zip(&events[next].jump) {
                *xk += j;
            }
            next += 1;
        }
        times.push(t);
        values.push(x.clone());
    }
    Ok(SamplePath {
        times,
        values,
        scheme: format!("levy-exact[{}]", model.label),
        seed: rng.seed(),
        jumps: Some(events),
        status: PathStatus::Complete,
    })
}

/// `x0 + Z` for a Levy model `Z`.
#[derive(Debug, Clone)]
pub struct LevySampler {
    pub model: LevyModel,
}

impl PathSampler for LevySampler {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn label(&self) -> String {
        self.model.label.clone()
    }

    fn sample_from(&self, x0: &[f64], grid: &GridSpec, rng: &mut RandomState, mirror: bool) -> Result<SamplePath> {
        simulate_levy_from(&self.model, x0, grid, rng, mirror)
    }

    fn supports_mirror(&self) -> bool {
        self.model.noise_is_symmetric()
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpDist;

    #[test]
    fn drift_only_path() {
        let m = LevyModel::drift_only(vec![1.0]).unwrap();
        let p = simulate_levy(&m, &GridSpec::new(1.0, 3).unwrap(), &mut RandomState::new(1)).unwrap();
        for (i, v) in p.values.iter().enumerate() {
            assert!((v[0] - 0.125 * i as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn brownian_quadratic_sum() {
        let m = LevyModel::brownian(1.0);
        let p = simulate_levy(&m, &GridSpec::new(1.0, 10).unwrap(), &mut RandomState::new(5)).unwrap();
        let qv: f64 = p.values.windows(2).map(|w| (w[1][0] - w[0][0]).powi(2)).sum();
        assert!((qv - 1.0).abs() < 0.15, "{qv}");
    }

    #[test]
    fn poisson_jump_counts() {
        let m = LevyModel::compound_poisson(3.0, JumpDist::Dirac { jump: vec![1.0] }).unwrap();
        let g = GridSpec::new(1.0, 4).unwrap();
        let n = 10_000;
        let total: usize = (0..n)
            .map(|i| {
                let p = simulate_levy(&m, &g, &mut RandomState::derive(9, "cp", i)).unwrap();
                let k = p.jumps.as_ref().unwrap().len();
                assert_eq!(p.last()[0], k as f64);
                k
            })
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.06, "{mean}");
    }

    #[test]
    fn determinism_and_mirror() {
        let m = LevyModel::brownian(1.0);
        let g = GridSpec::new(1.0, 6).unwrap();
        let a = simulate_levy(&m, &g, &mut RandomState::new(3)).unwrap();
        let b = simulate_levy(&m, &g, &mut RandomState::new(3)).unwrap();
        assert_eq!(a, b);
        let c = simulate_levy_from(&m, &[0.0], &g, &mut RandomState::new(3), true).unwrap();
        for (u, v) in a.values.iter().zip(&c.values) {
            assert_eq!(u[0], -v[0]);
        }
        let gam = LevyModel::gamma_subordinator(1.0, 1.0).unwrap();
        assert!(simulate_levy_from(&gam, &[0.0], &g, &mut RandomState::new(3), true).is_err());
    }
}
