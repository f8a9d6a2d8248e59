//! Chambers-Mallows-Stuck generator for symmetric stable laws.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::FRAC_PI_2;

/// One draw `S` with `E exp(i xi S) = exp(-|xi|^alpha)`, `alpha` in (0, 2].
pub fn standard_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    loop {
        let s = cms_draw(alpha, rng);
        // extreme tails of small-alpha draws can overflow
        if s.is_finite() {
            return s;
        }
    }
}

fn cms_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    // open interval (-pi/2, pi/2)
    let mut u: f64 = rng.random();
    while u == 0.0 {
        u = rng.random();
    }
    let v = (u - 0.5) * std::f64::consts::PI;
    let w: f64 = Exp1.sample(rng);
    let w = w.max(f64::MIN_POSITIVE);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    if (alpha - 2.0).abs() < 1e-12 {
        // exp(-xi^2) is N(0, 2)
        return 2.0 * v.sin() * w.sqrt();
    }
    let cos_v = v.cos().max(f64::MIN_POSITIVE);
    let head = (alpha * v).sin() / cos_v.powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    let s = head * tail;
    debug_assert!(v.abs() < FRAC_PI_2);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomState;

    fn empirical_cf(alpha: f64, xi: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = RandomState::new(seed);
        let draws: Vec<f64> = (0..n)
            .map(|_| (xi * standard_symmetric_stable(alpha, &mut rng)).cos())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn characteristic_function_matches_across_alpha() {
        for (i, &alpha) in [0.5, 0.8, 1.0, 1.2, 1.7, 2.0].iter().enumerate() {
            for &xi in &[0.5, 1.0, 2.0] {
                let (m, se) = empirical_cf(alpha, xi, 100_000, 11 + i as u64);
                let exact = (-xi.abs().powf(alpha)).exp();
                assert!(
                    (m - exact).abs() <= 4.0 * se + 1e-3,
                    "alpha={alpha} xi={xi}: {m} vs {exact} (se {se})"
                );
            }
        }
    }

    #[test]
    fn draws_are_finite() {
        let mut rng = RandomState::new(5);
        for _ in 0..100_000 {
            assert!(standard_symmetric_stable(0.3, &mut rng).is_finite());
        }
    }
}
