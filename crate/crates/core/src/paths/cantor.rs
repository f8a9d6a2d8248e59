use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Cantor function at `num / 3^n` (exact ternary expansion, `n <= 30`).
pub fn cantor_ternary(num: u64, n: u32) -> Result<f64> {
    if n > 30 {
        return Err(invalid("n must be <= 30"));
    }
    let den = 3u64.pow(n);
    if num > den {
        return Err(invalid("argument must lie in [0, 1]"));
    }
    if num == den {
        return Ok(1.0);
    }
    let mut rem = num;
    let mut value = 0.0;
    let mut weight = 0.5;
    let mut scale = den;
    for _ in 0..n {
        scale /= 3;
        let digit = rem / scale;
        rem %= scale;
        match digit {
            0 => {}
            1 => return Ok(value + weight),
            _ => value += weight,
        }
        weight *= 0.5;
    }
    Ok(value)
}

/// Cantor function of a float by ternary-digit scan (60 digits).
pub fn cantor(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let mut x = t;
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..60 {
        x *= 3.0;
        let digit = x.floor();
        x -= digit;
        if digit == 1.0 {
            return value + weight;
        }
        if digit == 2.0 {
            value += weight;
        }
        weight *= 0.5;
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorRow {
    pub n: u32,
    /// `f(t_n) = (c(t_n) + t_n) / 2` at `t_n = 3^{-n}`.
    pub f: f64,
    /// `sin(f(t_n)) / t_n`.
    pub quotient: f64,
}

/// Rows `n = 1..=n_max` of the divergent quotient along `t_n = 3^{-n}`.
pub fn cantor_divergence(n_max: u32) -> Result<Vec<CantorRow>> {
    if n_max == 0 || n_max > 30 {
        return Err(invalid("n_max must lie in 1..=30"));
    }
    (1..=n_max)
        .map(|n| {
            let t = 3f64.powi(-(n as i32));
            let f = 0.5 * (cantor_ternary(1, n)? + t);
            Ok(CantorRow {
                n,
                f,
                quotient: f.sin() / t,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        assert_eq!(cantor_ternary(1, 1).unwrap(), 0.5);
        assert_eq!(cantor_ternary(1, 0).unwrap(), 1.0);
        assert_eq!(cantor_ternary(2, 2).unwrap(), 0.25);
        assert_eq!(cantor_ternary(7, 2).unwrap(), 0.75);
        assert!((cantor(0.75) - (1.0 - cantor(0.25))).abs() < 1e-12);
        assert!((cantor(0.25) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(cantor(1.0), 1.0);
    }

    #[test]
    fn first_row_and_closed_form() {
        let rows = cantor_divergence(20).unwrap();
        assert!((rows[0].f - 5.0 / 12.0).abs() < 1e-15);
        assert!((rows[0].quotient - 3.0 * (5.0f64 / 12.0).sin()).abs() < 1e-15);
        assert_eq!(format!("{:.5}", rows[0].quotient), "1.21414");
        for r in &rows {
            let closed = 0.5 * (1.5f64.powi(r.n as i32) + 1.0) * r.f.sin() / r.f;
            assert!((r.quotient - closed).abs() <= 1e-12 * closed);
        }
        let last = rows[19].quotient / rows[18].quotient;
        assert!((last - 1.5).abs() < 1e-3);
        assert!(cantor_divergence(31).is_err());
    }
}
