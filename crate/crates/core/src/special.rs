//! Special functions used by the distribution layer.
//!
//! Log-gamma, the regularized incomplete gamma and beta functions and the
//! error function come from `statrs`; this module only adds the pieces it
//! lacks and gives them the names the rest of the crate uses.

pub use statrs::function::beta::{beta_reg, ln_beta};
pub use statrs::function::erf::{erf_inv, erfc};
pub use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln C(n, k)` via log-gamma.
pub fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Log-sum-exp with max subtraction. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_small_values() {
        assert!((ln_factorial(0)).abs() < 1e-14);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn choose_matches_integer_arithmetic() {
        assert!((ln_choose(20.0, 13.0) - 77520f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_sum_exp_is_shift_invariant() {
        let a = log_sum_exp(&[1.0, 2.0, 3.0]);
        let b = log_sum_exp(&[1001.0, 1002.0, 1003.0]);
        assert!((b - a - 1000.0).abs() < 1e-10);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
