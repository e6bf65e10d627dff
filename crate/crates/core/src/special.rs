//! Gamma-family special functions. `ln_gamma`, `digamma` and the regularized
//! lower incomplete gamma come from statrs; trigamma is local.

pub(crate) use statrs::function::gamma::{digamma, ln_gamma};

/// Regularized lower incomplete gamma `P(a, x)`, with `P(a, 0) = 0`.
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// Derivative of the digamma function, for `x > 0`.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series in 1/x with Bernoulli-number coefficients
    acc + inv
        + inv2 / 2.0
        + inv * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigamma_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-12);
        assert!((trigamma(2.0) - (pi2 / 6.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn trigamma_matches_finite_difference_of_digamma() {
        for &x in &[0.3f64, 1.7, 4.0, 12.5, 150.0] {
            let h = 1e-5 * x.max(1.0);
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() < 1e-6 * trigamma(x).max(1.0), "x={x}");
        }
    }

    #[test]
    fn gamma_p_edges() {
        assert_eq!(gamma_p(2.0, 0.0), 0.0);
        assert!((gamma_p(1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }
}
