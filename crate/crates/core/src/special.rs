//! Distribution functions used by the interval formulas.

use std::f64::consts::SQRT_2;

use libm::erfc;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile `z_p`; infinite at `p ∈ {0, 1}`.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    std_normal().inverse_cdf(p)
}

/// Student t quantile with `df` degrees of freedom.
pub fn t_ppf(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Chi-squared quantile with `df` degrees of freedom.
pub fn chi2_ppf(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

/// Beta quantile by bisection on the regularized incomplete beta.
///
/// Bisection is run to the floating-point resolution of the bracket, so the
/// absolute error is bounded by a few ulps of the result.
pub fn beta_ppf(p: f64, a: f64, b: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Binomial CDF `P(X ≤ k)` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binom_cdf(k: i64, n: u64, p: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if k as u64 >= n {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut total = 0.0;
    for i in 0..=(k as u64) {
        let ln_choose = statrs::function::factorial::ln_binomial(n, i);
        total += (ln_choose + i as f64 * ln_p + (n - i) as f64 * ln_q).exp();
    }
    total.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_quantiles() {
        assert!((norm_ppf(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((t_ppf(0.975, 2.0) - 4.302_652_729_911_275).abs() < 1e-9);
        assert!((chi2_ppf(0.025, 9.0) - 2.700_389_499_980_7).abs() < 1e-8);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-14);
    }

    #[test]
    fn beta_ppf_inverts_closed_form() {
        // Beta(10, 2) has CDF 11 x^10 - 10 x^11.
        for &p in &[0.05, 0.5, 0.95] {
            let x = beta_ppf(p, 10.0, 2.0);
            let cdf = 11.0 * x.powi(10) - 10.0 * x.powi(11);
            assert!((cdf - p).abs() < 1e-12, "p={p} x={x} cdf={cdf}");
        }
    }

    #[test]
    fn binomial_cdf_small_cases() {
        assert!((binom_cdf(3, 4, 0.95) - (1.0 - 0.95f64.powi(4))).abs() < 1e-14);
        assert!((binom_cdf(0, 4, 0.5) - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(binom_cdf(-1, 4, 0.5), 0.0);
        assert_eq!(binom_cdf(4, 4, 0.5), 1.0);
    }
}
