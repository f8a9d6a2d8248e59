use super::{GridSpec, PathStatus, SamplePath};
use crate::error::{invalid, Result};

/// `Y_t = X_{A_t}` on `grid`, reading `X` right-continuously (the last grid
/// value at or before `A_t`).
pub fn time_change(path: &SamplePath, clock: &dyn Fn(f64) -> f64, grid: &GridSpec) -> Result<SamplePath> {
    let times = grid.times();
    let a: Vec<f64> = times.iter().map(|&t| clock(t)).collect();
    if a[0] != 0.0 {
        return Err(invalid("clock must start at 0"));
    }
    if a.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("clock must be nondecreasing"));
    }
    let horizon = path.horizon();
    let slack = 1e-12 * horizon.max(1.0);
    if *a.last().expect("nonempty") > horizon + slack {
        return Err(invalid(format!("clock exceeds path horizon {horizon}")));
    }
    let values = a
        .iter()
        .map(|&s| {
            let k = path.times.partition_point(|&u| u <= s + slack);
            path.values[k.saturating_sub(1)].clone()
        })
        .collect();
    Ok(SamplePath {
        times,
        values,
        scheme: format!("time-change[{}]", path.scheme),
        seed: path.seed,
        jumps: None,
        status: PathStatus::Complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyModel;
    use crate::paths::simulate_levy;
    use crate::rng::RandomState;

    #[test]
    fn identity_and_doubling() {
        let g = GridSpec::new(2.0, 12).unwrap();
        let x = simulate_levy(&LevyModel::brownian(1.0), &g, &mut RandomState::new(3)).unwrap();
        let same = time_change(&x, &|t| t, &g).unwrap();
        assert_eq!(same.values, x.values);
        let y = time_change(&x, &|t| 2.0 * t, &GridSpec::new(1.0, 11).unwrap()).unwrap();
        let qv: f64 = y.values.windows(2).map(|w| (w[1][0] - w[0][0]).powi(2)).sum();
        assert!((qv - 2.0).abs() < 0.3, "{qv}");
        assert!(time_change(&x, &|t| 3.0 * t, &GridSpec::new(1.0, 4).unwrap()).is_err());
        assert!(time_change(&x, &|t| 1.0 - t, &GridSpec::new(1.0, 4).unwrap()).is_err());
    }
}
