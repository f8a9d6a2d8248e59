//! Deterministic grids for sups and infs over balls and boxes (d <= 3).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Grid resolutions. Defaults depend on the dimension, see [`GridConfig::for_dim`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Directions on the unit sphere (d >= 2).
    pub directions: usize,
    /// Radii of the xi-ball grid.
    pub radii: usize,
    /// Radii of the state-ball grid.
    pub ball_radii: usize,
    /// Points per axis of a box grid.
    pub box_points: usize,
    /// Box doublings of the unboundedness probe.
    pub doublings: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            directions: 64,
            radii: 32,
            ball_radii: 8,
            box_points: 65,
            doublings: 3,
        }
    }
}

impl GridConfig {
    pub fn for_dim(d: usize) -> Self {
        match d {
            0 | 1 => Self::default(),
            2 => Self {
                directions: 16,
                radii: 16,
                ball_radii: 4,
                box_points: 9,
                doublings: 3,
            },
            _ => Self {
                directions: 24,
                radii: 8,
                ball_radii: 3,
                box_points: 5,
                doublings: 3,
            },
        }
    }
}

/// Unit vectors: `{-1, 1}` in d=1, equally spaced angles in d=2, a Fibonacci
/// lattice in d=3.
pub fn unit_directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            // coordinate directions only
            (0..2 * d)
                .map(|k| {
                    let mut v = vec![0.0; d];
                    v[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
                    v
                })
                .collect()
        }
    }
}

/// Points of the closed unit ball: the origin plus `radii` shells (outermost
/// shell on the sphere).
pub fn unit_ball(d: usize, directions: usize, radii: usize) -> Vec<Vec<f64>> {
    let dirs = unit_directions(d, directions);
    let mut pts = vec![vec![0.0; d]];
    for j in 1..=radii {
        let r = j as f64 / radii as f64;
        pts.extend(dirs.iter().map(|u| u.iter().map(|c| c * r).collect()));
    }
    pts
}

/// Same as [`unit_ball`] without the origin.
pub fn punctured_unit_ball(d: usize, directions: usize, radii: usize) -> Vec<Vec<f64>> {
    let mut pts = unit_ball(d, directions, radii);
    pts.remove(0);
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box bounds must be nonempty and of equal length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("box needs finite lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(d: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; d],
            hi: vec![half_width; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Box scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let c = 0.5 * (a + b);
                let h = 0.5 * (b - a) * factor;
                (c - h, c + h)
            })
            .unzip();
        Self { lo, hi }
    }

    /// Tensor grid with `n` points per axis (endpoints included).
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(1);
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                if n == 1 || a == b {
                    vec![0.5 * (a + b)]
                } else {
                    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
                }
            })
            .collect();
        let mut pts = vec![Vec::new()];
        for axis in &axes {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit() {
        for d in 1..=3 {
            for u in unit_directions(d, 40) {
                let n: f64 = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_contains_origin_and_sphere() {
        let b = unit_ball(1, 64, 4);
        assert_eq!(b.len(), 9);
        assert!(b.contains(&vec![1.0]) && b.contains(&vec![-1.0]) && b.contains(&vec![0.0]));
    }

    #[test]
    fn box_grid_and_scaling() {
        let bx = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(bx.grid(3).len(), 9);
        let big = bx.scaled(2.0);
        assert_eq!(big.lo, vec![-1.0, -2.0]);
        assert_eq!(big.hi, vec![3.0, 2.0]);
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
    }
}
