use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pvar_exact;
use crate::error::{invalid, Result};
use crate::paths::GridSpec;
use crate::rng::RandomState;
use crate::util::{format_f64, lossless_f64, median};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarVerdict {
    Finite,
    Infinite,
    Inconclusive,
}

impl VarVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            VarVerdict::Finite => "finite",
            VarVerdict::Infinite => "infinite",
            VarVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarIndexConfig {
    pub horizon: f64,
    /// Dyadic levels `k` (grid of `2^k` steps), strictly increasing.
    pub levels: Vec<u32>,
    pub p_grid: Vec<f64>,
    pub n_paths: usize,
    #[serde(default = "default_eps_finite")]
    pub eps_finite: f64,
    #[serde(default = "default_eps_infinite")]
    pub eps_infinite: f64,
    /// Dyadic levels between the two compared grids; `None` uses half the
    /// level span, rounded up.
    #[serde(default)]
    pub verdict_gap: Option<u32>,
}

fn default_eps_finite() -> f64 {
    0.1
}

fn default_eps_infinite() -> f64 {
    0.2
}

impl VarIndexConfig {
    pub fn new(horizon: f64, levels: Vec<u32>, p_grid: Vec<f64>, n_paths: usize) -> Self {
        Self {
            horizon,
            levels,
            p_grid,
            n_paths,
            eps_finite: default_eps_finite(),
            eps_infinite: default_eps_infinite(),
            verdict_gap: None,
        }
    }

    /// Index into `levels` of the coarse grid compared with the finest one.
    pub fn reference_level(&self) -> usize {
        let finest = *self.levels.last().unwrap();
        let span = finest - self.levels[0];
        let gap = self.verdict_gap.unwrap_or(span.div_ceil(2)).clamp(1, span);
        self.levels.iter().rposition(|k| *k <= finest - gap).unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.len() < 3 {
            return Err(invalid("need at least 3 dyadic levels"));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("levels must be strictly increasing"));
        }
        if self.p_grid.is_empty() || self.p_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("p_grid must be nonempty and strictly increasing"));
        }
        if self.p_grid.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(invalid("p_grid entries must be finite and > 0"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be >= 1"));
        }
        if !(0.0 <= self.eps_finite && self.eps_finite <= self.eps_infinite) {
            return Err(invalid("need 0 <= eps_finite <= eps_infinite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarIndexReport {
    pub p_grid: Vec<f64>,
    pub levels: Vec<u32>,
    pub verdicts: Vec<VarVerdict>,
    /// `None` when no p received a finite verdict.
    pub v_hat: Option<f64>,
    /// True when `v_hat` sits on an end of `p_grid` rather than between two verdicts.
    pub v_hat_boundary: bool,
    /// Per p: median over paths of `V(finest) / V(reference)`.
    pub growth_ratios: Vec<f64>,
    /// Level `k` of the reference grid.
    pub reference_level: u32,
    /// Per p, per level: median over paths of the sampled p-variation.
    pub level_medians: Vec<Vec<f64>>,
    /// Per p, per level after the first: median of `V(k) / V(k-1)`.
    pub adjacent_ratios: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub dropped: usize,
    #[serde(with = "lossless_f64")]
    pub eps_finite: f64,
    #[serde(with = "lossless_f64")]
    pub eps_infinite: f64,
}

impl VarIndexReport {
    pub fn verdict_at(&self, p: f64) -> Option<VarVerdict> {
        self.p_grid.iter().position(|q| *q == p).map(|i| self.verdicts[i])
    }

    /// Rows `p,level,median_V,ratio,verdict`; `ratio` is the adjacent-level ratio
    /// (empty on the coarsest level).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,level,median_V,ratio,verdict\n");
        for (i, p) in self.p_grid.iter().enumerate() {
            for (j, k) in self.levels.iter().enumerate() {
                let ratio = if j == 0 { String::new() } else { format_f64(self.adjacent_ratios[i][j - 1]) };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_f64(*p),
                    k,
                    format_f64(self.level_medians[i][j]),
                    ratio,
                    self.verdicts[i].as_str()
                ));
            }
        }
        out
    }
}

/// Per-path values at the finest level; coarser levels are obtained by
/// subsampling, so every level shares the same randomness.
pub type FinestSampler<'a> = dyn Fn(&GridSpec, &mut RandomState) -> Result<Vec<Vec<f64>>> + Sync + 'a;

/// Empirical dichotomy of the sampled p-variation under dyadic refinement.
///
/// The verdict for each p uses the median over paths of `V(finest)/V(reference)`,
/// the reference grid lying `verdict_gap` dyadic levels below the finest:
/// `<= 1 + eps_finite` is finite, `>= 1 + eps_infinite` infinite, otherwise
/// inconclusive. Paths whose sampler fails are dropped and counted.
pub fn variation_index_estimate(
    sampler: &FinestSampler<'_>,
    cfg: &VarIndexConfig,
    master_seed: u64,
    label: &str,
) -> Result<VarIndexReport> {
    cfg.validate()?;
    let finest = *cfg.levels.last().unwrap();
    let grid = GridSpec::new(cfg.horizon, finest)?;
    let np = cfg.p_grid.len();
    let nl = cfg.levels.len();
    let rl = cfg.reference_level();

    // per path: values[p][level]
    let per_path: Vec<Option<Vec<Vec<f64>>>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomState::derive(master_seed, label, i as u64);
            let values = match sampler(&grid, &mut rng) {
                Ok(v) if v.len() == grid.steps() + 1 => v,
                _ => return Ok(None),
            };
            let mut out = vec![vec![0.0; nl]; np];
            for (j, k) in cfg.levels.iter().enumerate() {
                let stride = 1usize << (finest - k);
                let sub: Vec<Vec<f64>> = values.iter().step_by(stride).cloned().collect();
                for (a, p) in cfg.p_grid.iter().enumerate() {
                    out[a][j] = pvar_exact(&sub, *p)?.value;
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<Vec<Vec<f64>>> = per_path.into_iter().flatten().collect();
    let dropped = cfg.n_paths - kept.len();
    if kept.is_empty() {
        return Err(invalid(format!("all {} paths failed to sample", cfg.n_paths)));
    }

    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 1.0 };
    let mut level_medians = vec![vec![0.0; nl]; np];
    let mut adjacent_ratios = vec![vec![0.0; nl - 1]; np];
    let mut growth_ratios = vec![0.0; np];
    for a in 0..np {
        for j in 0..nl {
            let col: Vec<f64> = kept.iter().map(|v| v[a][j]).collect();
            level_medians[a][j] = median(&col);
            if j > 0 {
                let r: Vec<f64> = kept.iter().map(|v| ratio(v[a][j], v[a][j - 1])).collect();
                adjacent_ratios[a][j - 1] = median(&r);
            }
        }
        let r: Vec<f64> = kept.iter().map(|v| ratio(v[a][nl - 1], v[a][rl])).collect();
        growth_ratios[a] = median(&r);
    }

    let mut verdicts: Vec<VarVerdict> = growth_ratios
        .iter()
        .map(|r| {
            if *r <= 1.0 + cfg.eps_finite {
                VarVerdict::Finite
            } else if *r >= 1.0 + cfg.eps_infinite {
                VarVerdict::Infinite
            } else {
                VarVerdict::Inconclusive
            }
        })
        .collect();
    repair_monotone(&mut verdicts);
    let (v_hat, v_hat_boundary) = locate_index(&cfg.p_grid, &verdicts);

    Ok(VarIndexReport {
        p_grid: cfg.p_grid.clone(),
        levels: cfg.levels.clone(),
        verdicts,
        v_hat,
        v_hat_boundary,
        growth_ratios,
        reference_level: cfg.levels[rl],
        level_medians,
        adjacent_ratios,
        n_paths: cfg.n_paths,
        dropped,
        eps_finite: cfg.eps_finite,
        eps_infinite: cfg.eps_infinite,
    })
}

/// If some finite verdict precedes an infinite one, everything from the first
/// finite to the last infinite becomes inconclusive.
pub fn repair_monotone(v: &mut [VarVerdict]) {
    let first_fin = v.iter().position(|x| *x == VarVerdict::Finite);
    let last_inf = v.iter().rposition(|x| *x == VarVerdict::Infinite);
    if let (Some(f), Some(i)) = (first_fin, last_inf) {
        if f < i {
            for x in &mut v[f..=i] {
                *x = VarVerdict::Inconclusive;
            }
        }
    }
}

fn locate_index(p: &[f64], v: &[VarVerdict]) -> (Option<f64>, bool) {
    let last_inf = v.iter().rposition(|x| *x == VarVerdict::Infinite);
    let first_fin = v.iter().position(|x| *x == VarVerdict::Finite);
    match (last_inf, first_fin) {
        (Some(i), Some(f)) => (Some(0.5 * (p[i] + p[f])), false),
        (None, Some(f)) => (Some(p[f]), true),
        (Some(_), None) => (Some(*p.last().unwrap()), true),
        (None, None) => (None, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use VarVerdict::*;

    #[test]
    fn repair_widens_band() {
        let mut v = vec![Infinite, Finite, Infinite, Finite];
        repair_monotone(&mut v);
        assert_eq!(v, vec![Infinite, Inconclusive, Inconclusive, Finite]);
        let (vh, b) = locate_index(&[1.0, 2.0, 3.0, 4.0], &v);
        assert_eq!((vh, b), (Some(2.5), false));
    }

    #[test]
    fn constant_path_is_finite_everywhere() {
        let s = |g: &GridSpec, _: &mut RandomState| Ok(vec![vec![1.0]; g.steps() + 1]);
        let cfg = VarIndexConfig::new(1.0, vec![3, 4, 5], vec![0.5, 1.0, 2.0], 4);
        let r = variation_index_estimate(&s, &cfg, 1, "c").unwrap();
        assert!(r.verdicts.iter().all(|v| *v == Finite));
        assert!(r.v_hat_boundary);
        assert!(r.to_csv().lines().count() == 1 + 9);
    }

    #[test]
    fn failing_paths_are_dropped() {
        let s = |g: &GridSpec, r: &mut RandomState| {
            if r.seed().is_multiple_of(2) {
                Err(crate::error::invalid("boom"))
            } else {
                Ok(vec![vec![0.0]; g.steps() + 1])
            }
        };
        let cfg = VarIndexConfig::new(1.0, vec![2, 3, 4], vec![1.0], 16);
        let r = variation_index_estimate(&s, &cfg, 3, "d").unwrap();
        assert!(r.dropped > 0 && r.dropped < 16);
    }
}
