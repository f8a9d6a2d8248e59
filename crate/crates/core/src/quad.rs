//! Adaptive quadrature on finite intervals (double-exponential rule with bisection).

use quadrature::double_exponential;

const MAX_DEPTH: u32 = 16;

/// `int_a^b f` to roughly `tol` absolute error.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(f, a, b, tol, 0)
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(1e-15 * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// Sum of [`integrate`] over consecutive breakpoints.
pub fn integrate_pieces(f: &impl Fn(f64) -> f64, points: &[f64], tol: f64) -> f64 {
    let n = points.len().saturating_sub(1).max(1) as f64;
    points.windows(2).map(|w| integrate(f, w[0], w[1], tol / n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_integrals() {
        let v = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10);
        assert!((v - 2.0).abs() < 1e-8);
        let v = integrate_pieces(&|x: f64| (-x).exp(), &[0.0, 1.0, 10.0, 60.0], 1e-12);
        assert!((v - 1.0).abs() < 1e-11);
    }
}
