use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal distribution function, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile. `p` is clamped away from 0 and 1.
pub fn norm_inv(p: f64) -> f64 {
    thread_local! {
        static STD: Normal = Normal::standard();
    }
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    STD.with(|n| n.inverse_cdf(p))
}
