//! Method-of-moments and maximum-likelihood fitting.

use super::{Family, FamilyKind, FitMethod, FittedDistribution};
use crate::error::{Error, Result};
use crate::numerics::{maximize_bfgs, maximize_bfgs_with_grad};
use statrs::function::gamma::{digamma, ln_gamma};

const MLE_GRAD_TOL: f64 = 1e-8;

/// Fits a family by matching its untruncated mean and variance.
///
/// The Weibull shape is solved numerically from the squared coefficient of
/// variation; the other families invert in closed form.
pub fn fit_moments(kind: FamilyKind, mean: f64, var: f64) -> Result<FittedDistribution> {
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::InfeasibleMoments {
            family: kind.name(),
            reason: format!("variance must be positive, got {var}"),
        });
    }
    if kind != FamilyKind::Normal && !(mean > 0.0) {
        return Err(Error::InfeasibleMoments {
            family: kind.name(),
            reason: format!("mean must be positive, got {mean}"),
        });
    }
    let family = match kind {
        FamilyKind::Gamma => {
            let scale = var / mean;
            Family::Gamma {
                shape: mean / scale,
                scale,
            }
        }
        FamilyKind::Lognormal => {
            let s2 = (1.0 + var / (mean * mean)).ln();
            Family::Lognormal {
                log_mean: mean.ln() - 0.5 * s2,
                log_sd: s2.sqrt(),
            }
        }
        FamilyKind::Normal => Family::Normal {
            mean,
            sd: var.sqrt(),
        },
        FamilyKind::Weibull => {
            let shape = weibull_shape_from_cv2(var / (mean * mean))?;
            let scale = mean / ln_gamma(1.0 + 1.0 / shape).exp();
            Family::Weibull { shape, scale }
        }
    };
    Ok(FittedDistribution::new(family)?.with_method(FitMethod::MethodOfMoments))
}

/// Solves Gamma(1 + 2/k) / Gamma(1 + 1/k)^2 = 1 + cv2 for the Weibull shape.
/// The left side is strictly decreasing in k, so bisection suffices.
fn weibull_shape_from_cv2(cv2: f64) -> Result<f64> {
    if !(cv2 > 0.0) {
        return Err(Error::InfeasibleMoments {
            family: "weibull",
            reason: "coefficient of variation must be positive".into(),
        });
    }
    let target = (1.0 + cv2).ln();
    let f = |k: f64| ln_gamma(1.0 + 2.0 / k) - 2.0 * ln_gamma(1.0 + 1.0 / k) - target;
    let (mut lo, mut hi) = (1e-2, 1e3);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::InfeasibleMoments {
            family: "weibull",
            reason: format!("no shape in [{lo}, {hi}] matches cv^2 = {cv2}"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-14 * lo {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximum-likelihood fit on raw observations.
///
/// Normal and Lognormal have closed-form estimators (variance denominator n);
/// Gamma and Weibull maximize the log-likelihood with BFGS over log-parameters
/// starting from the method-of-moments fit, Gamma with the analytic gradient
/// and Weibull with central finite differences.
pub fn fit_mle(kind: FamilyKind, data: &[f64]) -> Result<FittedDistribution> {
    if data.len() < 2 {
        return Err(Error::DegenerateData(
            "maximum-likelihood fitting needs at least two observations".into(),
        ));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateData("non-finite observation".into()));
    }
    if kind != FamilyKind::Normal && data.iter().any(|&x| x <= 0.0) {
        return Err(Error::NonPositiveData {
            family: kind.name(),
        });
    }

    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;

    let family = match kind {
        FamilyKind::Normal => {
            if var == 0.0 {
                return Err(Error::DegenerateData(
                    "all observations identical; normal MLE is degenerate".into(),
                ));
            }
            Family::Normal {
                mean,
                sd: var.sqrt(),
            }
        }
        FamilyKind::Lognormal => {
            let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
            let lm = logs.iter().sum::<f64>() / n;
            let lv = logs.iter().map(|l| (l - lm) * (l - lm)).sum::<f64>() / n;
            if lv == 0.0 {
                return Err(Error::DegenerateData(
                    "all observations identical; lognormal MLE is degenerate".into(),
                ));
            }
            Family::Lognormal {
                log_mean: lm,
                log_sd: lv.sqrt(),
            }
        }
        FamilyKind::Gamma => {
            if var == 0.0 {
                return Err(Error::DegenerateData(
                    "all observations identical; gamma MLE is degenerate".into(),
                ));
            }
            let sum_x: f64 = data.iter().sum();
            let sum_ln: f64 = data.iter().map(|x| x.ln()).sum();
            let loglik = |z: &[f64]| {
                let (k, theta) = (z[0].exp(), z[1].exp());
                (k - 1.0) * sum_ln - sum_x / theta - n * k * theta.ln() - n * ln_gamma(k)
            };
            let grad = |z: &[f64]| {
                let (k, theta) = (z[0].exp(), z[1].exp());
                vec![
                    k * (sum_ln - n * theta.ln() - n * digamma(k)),
                    sum_x / theta - n * k,
                ]
            };
            let init = fit_moments(FamilyKind::Gamma, mean, var)?;
            let (k0, t0) = match *init.family() {
                Family::Gamma { shape, scale } => (shape, scale),
                _ => unreachable!(),
            };
            let opt =
                maximize_bfgs_with_grad(loglik, grad, &[k0.ln(), t0.ln()], MLE_GRAD_TOL)?;
            Family::Gamma {
                shape: opt.x[0].exp(),
                scale: opt.x[1].exp(),
            }
        }
        FamilyKind::Weibull => {
            if var == 0.0 {
                return Err(Error::DegenerateData(
                    "all observations identical; weibull MLE is degenerate".into(),
                ));
            }
            let sum_ln: f64 = data.iter().map(|x| x.ln()).sum();
            let loglik = |z: &[f64]| {
                let (k, lambda) = (z[0].exp(), z[1].exp());
                let ln_lambda = lambda.ln();
                let pow_sum: f64 = data
                    .iter()
                    .map(|x| (k * (x.ln() - ln_lambda)).exp())
                    .sum();
                n * k.ln() - n * k * ln_lambda + (k - 1.0) * sum_ln - pow_sum
            };
            let init = fit_moments(FamilyKind::Weibull, mean, var)?;
            let (k0, l0) = match *init.family() {
                Family::Weibull { shape, scale } => (shape, scale),
                _ => unreachable!(),
            };
            let opt = maximize_bfgs(loglik, &[k0.ln(), l0.ln()], MLE_GRAD_TOL)?;
            Family::Weibull {
                shape: opt.x[0].exp(),
                scale: opt.x[1].exp(),
            }
        }
    };
    Ok(FittedDistribution::new(family)?.with_method(FitMethod::MaxLikelihood))
}

/// Log-likelihood of raw observations under an untruncated family.
pub fn log_likelihood(family: &Family, data: &[f64]) -> f64 {
    let parent = family.parent();
    data.iter().map(|&x| parent.pdf(x).ln()).sum()
}
