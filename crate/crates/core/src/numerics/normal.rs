//! Standard normal distribution function, quantile, and density.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506628274631000502415765284811;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Standard normal quantile.
///
/// Acklam's rational approximation refined by two Newton steps through
/// `normal_cdf`, giving |normal_cdf(normal_quantile(p)) - p| < 1e-12 across
/// p in [1e-10, 1 - 1e-10].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(format!(
            "normal_quantile requires p in (0, 1), got {p}"
        )));
    }
    let mut x = acklam(p);
    // Newton refinement; the correction is well conditioned because erfc keeps
    // relative accuracy in both tails.
    for _ in 0..2 {
        let err = normal_cdf(x) - p;
        let d = normal_pdf(x);
        if d > 0.0 {
            x -= err / d;
        }
    }
    Ok(x)
}

/// z such that P(|Z| <= z) = level, i.e. the 1 - (1-level)/2 quantile.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::DomainError(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    normal_quantile(1.0 - 0.5 * (1.0 - level))
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_constants() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-12);
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!((z_for_level(0.95).unwrap() - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let mut ps = vec![1e-10, 1e-8, 1e-4, 0.02425, 0.3, 0.5, 0.7, 0.97575];
        ps.extend(ps.clone().iter().map(|p| 1.0 - p));
        for p in ps {
            let x = normal_quantile(p).unwrap();
            assert!(
                (normal_cdf(x) - p).abs() < 1e-12,
                "round trip failed at p = {p}"
            );
        }
    }

    #[test]
    fn cdf_symmetry() {
        for i in 0..200 {
            let x = -8.0 + 0.08 * i as f64;
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_domain() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }
}
