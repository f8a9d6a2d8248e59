//! Exact strong p-variation of sampled sequences and an empirical
//! variation-index estimator over dyadic refinements.

mod index;

pub use index::{repair_monotone, variation_index_estimate, FinestSampler, VarIndexConfig, VarIndexReport, VarVerdict};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::util::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PVarMethod {
    Dp,
    Full,
    Bruteforce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVarResult {
    pub p: f64,
    pub value: f64,
    /// Indices of the optimal partition, first and last point included.
    pub partition: Vec<usize>,
    pub method: PVarMethod,
}

/// Largest sequence accepted by [`pvar_exact`] unless raised explicitly.
pub const DEFAULT_MAX_POINTS: usize = 1 << 16;
/// Largest sequence accepted by [`pvar_bruteforce`].
pub const BRUTEFORCE_MAX_POINTS: usize = 20;

/// `|a - b|^p` in the Euclidean norm.
#[inline]
pub fn increment_power(a: &[f64], b: &[f64], p: f64) -> f64 {
    dist(a, b).powf(p)
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check(values: &[Vec<f64>], p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("p must be finite and > 0, got {p}")));
    }
    if values.is_empty() {
        return Err(invalid("need at least one point"));
    }
    let d = values[0].len();
    for v in values {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("points must be finite"));
        }
    }
    Ok(())
}

/// Sum of `|v_{i_{k+1}} - v_{i_k}|^p` along `partition`. For `p <= 1` the sum
/// is correctly rounded from exact one-dimensional differences, so
/// subadditivity survives rounding and the full partition stays maximal; for
/// `p > 1` it accumulates left to right, matching the dynamic program.
pub fn partition_sum(values: &[Vec<f64>], partition: &[usize], p: f64) -> f64 {
    if p <= 1.0 {
        let mut terms = Vec::with_capacity(2 * partition.len());
        for w in partition.windows(2) {
            push_increment(&values[w[0]], &values[w[1]], p, &mut terms);
        }
        exact_sum(terms)
    } else {
        partition
            .windows(2)
            .fold(0.0, |acc, w| acc + increment_power(&values[w[0]], &values[w[1]], p))
    }
}

fn push_increment(a: &[f64], b: &[f64], p: f64, out: &mut Vec<f64>) {
    if a.len() == 1 && p == 1.0 {
        // two-sum: b - a == s + e exactly
        let (x, y) = (b[0], -a[0]);
        let s = x + y;
        let bv = s - x;
        let e = (x - (s - bv)) + (y - bv);
        let sign = if s < 0.0 || (s == 0.0 && e < 0.0) { -1.0 } else { 1.0 };
        out.push(sign * s);
        out.push(sign * e);
    } else {
        out.push(increment_power(a, b, p));
    }
}

/// Exact supremum of `sum |Delta|^p` over all partitions of the sampled points.
pub fn pvar_exact(values: &[Vec<f64>], p: f64) -> Result<PVarResult> {
    pvar_exact_capped(values, p, DEFAULT_MAX_POINTS)
}

pub fn pvar_exact_capped(values: &[Vec<f64>], p: f64, max_points: usize) -> Result<PVarResult> {
    check(values, p)?;
    let n = values.len();
    if n > max_points {
        return Err(invalid(format!("{n} points exceed the cap {max_points}")));
    }
    if n == 1 {
        return Ok(PVarResult { p, value: 0.0, partition: vec![0], method: PVarMethod::Full });
    }
    if p <= 1.0 {
        let partition: Vec<usize> = (0..n).collect();
        let value = partition_sum(values, &partition, p);
        return Ok(PVarResult { p, value, partition, method: PVarMethod::Full });
    }
    let (value, partition) = PrunedDp::new(values).run(p);
    Ok(PVarResult { p, value, partition, method: PVarMethod::Dp })
}

/// Plain `O(n^2)` dynamic program, used as a reference for the pruned one
/// (meaningful for `p > 1`).
pub fn pvar_dp_quadratic(values: &[Vec<f64>], p: f64) -> Result<PVarResult> {
    check(values, p)?;
    let n = values.len();
    let mut best = vec![0.0; n];
    let mut prev = vec![0usize; n];
    for j in 1..n {
        let mut b = f64::NEG_INFINITY;
        for i in 0..j {
            let c = best[i] + increment_power(&values[i], &values[j], p);
            if c > b {
                b = c;
                prev[j] = i;
            }
        }
        best[j] = b;
    }
    Ok(PVarResult { p, value: best[n - 1], partition: backtrack(&prev), method: PVarMethod::Dp })
}

fn backtrack(prev: &[usize]) -> Vec<usize> {
    let mut out = vec![prev.len() - 1];
    let mut j = prev.len() - 1;
    while j > 0 {
        j = prev[j];
        out.push(j);
    }
    out.reverse();
    out
}

/// Exhaustive maximum over all `2^{n-2}` subsets of interior points.
pub fn pvar_bruteforce(values: &[Vec<f64>], p: f64) -> Result<PVarResult> {
    check(values, p)?;
    let n = values.len();
    if n > BRUTEFORCE_MAX_POINTS {
        return Err(invalid(format!("brute force refuses {n} > {BRUTEFORCE_MAX_POINTS} points")));
    }
    if n == 1 {
        return Ok(PVarResult { p, value: 0.0, partition: vec![0], method: PVarMethod::Bruteforce });
    }
    let interior = n - 2;
    let mut best = f64::NEG_INFINITY;
    let mut best_part = Vec::new();
    let mut part = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << interior) {
        part.clear();
        part.push(0);
        part.extend((0..interior).filter(|k| mask >> k & 1 == 1).map(|k| k + 1));
        part.push(n - 1);
        let s = partition_sum(values, &part, p);
        if s > best {
            best = s;
            best_part = part.clone();
        }
    }
    Ok(PVarResult { p, value: best, partition: best_part, method: PVarMethod::Bruteforce })
}

/// Dynamic program `best[j] = max_i best[i] + |v_j - v_i|^p` with branch and
/// bound over a dyadic tree of bounding balls. `best` is nondecreasing, so a
/// block `[lo, hi)` contributes at most `best[hi-1] + (|c - v_j| + r)^p`.
struct PrunedDp<'a> {
    values: &'a [Vec<f64>],
    /// Per tree level, per block: (center, radius).
    levels: Vec<Vec<(Vec<f64>, f64)>>,
}

const LEAF: usize = 8;

impl<'a> PrunedDp<'a> {
    fn new(values: &'a [Vec<f64>]) -> Self {
        let d = values[0].len();
        let mut levels = Vec::new();
        let mut size = LEAF;
        loop {
            let blocks = values
                .chunks(size)
                .map(|chunk| {
                    let mut lo = vec![f64::INFINITY; d];
                    let mut hi = vec![f64::NEG_INFINITY; d];
                    for v in chunk {
                        for k in 0..d {
                            lo[k] = lo[k].min(v[k]);
                            hi[k] = hi[k].max(v[k]);
                        }
                    }
                    let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    let r = chunk.iter().map(|v| dist(v, &c)).fold(0.0, f64::max);
                    (c, r)
                })
                .collect::<Vec<_>>();
            let count = blocks.len();
            levels.push(blocks);
            if count <= 1 {
                break;
            }
            size *= 2;
        }
        Self { values, levels }
    }

    fn run(&self, p: f64) -> (f64, Vec<usize>) {
        let n = self.values.len();
        let mut best = vec![0.0; n];
        let mut prev = vec![0usize; n];
        for j in 1..n {
            let vj = &self.values[j];
            let mut b = best[j - 1] + increment_power(&self.values[j - 1], vj, p);
            let mut arg = j - 1;
            // candidates i in [0, j-1)
            if j >= 2 {
                let top = self.levels.len() - 1;
                self.search(top, 0, j - 1, vj, p, &best, &mut b, &mut arg);
            }
            best[j] = b;
            prev[j] = arg;
        }
        (best[n - 1], backtrack(&prev))
    }

    #[allow(clippy::too_many_arguments)]
    fn search(&self, level: usize, block: usize, end: usize, vj: &[f64], p: f64, best: &[f64], b: &mut f64, arg: &mut usize) {
        let size = LEAF << level;
        let lo = block * size;
        if lo >= end {
            return;
        }
        let hi = ((block + 1) * size).min(end);
        let (c, r) = &self.levels[level][block];
        let reach = (dist(c, vj) + r) * (1.0 + 1e-9);
        if best[hi - 1] + reach.powf(p) <= *b {
            return;
        }
        if level == 0 {
            for i in (lo..hi).rev() {
                let cand = best[i] + increment_power(&self.values[i], vj, p);
                if cand > *b || (cand == *b && i < *arg) {
                    *b = cand;
                    *arg = i;
                }
            }
            return;
        }
        self.search(level - 1, 2 * block + 1, end, vj, p, best, b, arg);
        self.search(level - 1, 2 * block, end, vj, p, best, b, arg);
    }
}

/// Per-coordinate p-variations and the norm-equivalence sandwich
/// `c^p max_i V_i <= V <= C^p (d max d^p) max_i V_i` with `c = 1/sqrt(d)`, `C = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub total: PVarResult,
    pub components: Vec<PVarResult>,
    pub lower: f64,
    pub upper: f64,
    pub sandwich_holds: bool,
}

pub fn pvar_components(values: &[Vec<f64>], p: f64) -> Result<ComponentReport> {
    check(values, p)?;
    let d = values[0].len();
    if d == 0 {
        return Err(invalid("points must have dimension >= 1"));
    }
    let total = pvar_exact(values, p)?;
    let components = (0..d)
        .map(|k| {
            let coord: Vec<Vec<f64>> = values.iter().map(|v| vec![v[k]]).collect();
            pvar_exact(&coord, p)
        })
        .collect::<Result<Vec<_>>>()?;
    let vmax = components.iter().map(|c| c.value).fold(0.0, f64::max);
    let df = d as f64;
    let lower = df.powf(-0.5 * p) * vmax;
    let upper = df.max(df.powf(p)) * vmax;
    let tol = 1e-12 * upper.max(1e-300);
    let sandwich_holds = lower <= total.value + tol && total.value <= upper + tol;
    Ok(ComponentReport { total, components, lower, upper, sandwich_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomState;
    use rand::Rng;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|x| vec![*x]).collect()
    }

    #[test]
    fn small_examples() {
        let r = pvar_exact(&pts(&[0.0, 1.0, 2.0]), 2.0).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.partition, vec![0, 2]);
        let r = pvar_exact(&pts(&[0.0, 1.0, 0.0]), 0.5).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.partition, vec![0, 1, 2]);
        assert_eq!(pvar_bruteforce(&pts(&[0.0, 1.0]), 3.7).unwrap().value, 1.0);
        assert_eq!(pvar_bruteforce(&pts(&[0.0, 1.0, 0.0, 1.0]), 1.0).unwrap().value, 3.0);
        assert_eq!(pvar_exact(&pts(&[2.0]), 2.0).unwrap().value, 0.0);
        assert!(pvar_exact(&pts(&[0.0, 1.0]), 0.0).is_err());
        assert!(pvar_bruteforce(&pts(&[0.0; 21]), 2.0).is_err());
    }

    #[test]
    fn pruned_matches_quadratic_on_walks() {
        let mut rng = RandomState::new(17);
        for trial in 0..20 {
            let n = 50 + 40 * trial;
            let d = 1 + trial % 2;
            let mut x = vec![0.0; d];
            let mut v = vec![x.clone()];
            for _ in 1..n {
                for c in x.iter_mut() {
                    *c += rng.random::<f64>() - 0.5;
                }
                v.push(x.clone());
            }
            for p in [1.2, 2.0, 3.5] {
                let a = pvar_exact(&v, p).unwrap();
                let b = pvar_dp_quadratic(&v, p).unwrap();
                assert_eq!(a.value, b.value);
                assert_eq!(partition_sum(&v, &a.partition, p), a.value);
            }
        }
    }

    #[test]
    fn sandwich_and_components() {
        let v = pts(&[0.0, 1.0, -0.5, 2.0]);
        let r = pvar_components(&v, 1.5).unwrap();
        assert_eq!(r.components[0].value, r.total.value);
        let w: Vec<Vec<f64>> = v.iter().map(|x| vec![x[0], 0.0]).collect();
        let r = pvar_components(&w, 1.5).unwrap();
        assert_eq!(r.total.value, pvar_exact(&v, 1.5).unwrap().value);
        assert!(r.sandwich_holds);
    }
}
