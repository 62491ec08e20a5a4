//! Expected relative risk under a fitted exposure distribution.

use super::FittedDistribution;
use crate::error::{Error, Result};
use crate::numerics::{integrate_gk, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};
use crate::rr_models::{Counterfactual, RelativeRiskModel, RiskForm};
use crate::Family;

/// E[RR(g(X))] is either a finite number or provably infinite. Divergence is
/// an analytic verdict on the family/risk combination, never a quadrature
/// overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectedRr {
    Finite(f64),
    Divergent,
}

impl ExpectedRr {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExpectedRr::Finite(v) => Some(v),
            ExpectedRr::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, ExpectedRr::Divergent)
    }
}

/// Computes (1 - p0) * E_f[RR(g(X))] + p0 * RR(g(0)) over the truncation
/// window, renormalizing by the window mass when the distribution says so.
///
/// Closed forms are used for the untruncated Gamma and Normal with an
/// exponential risk; everything else goes through adaptive quadrature.
/// Scalar exposure only.
pub fn expected_rr(
    dist: &FittedDistribution,
    model: &RelativeRiskModel,
    cft: Option<&Counterfactual>,
) -> Result<ExpectedRr> {
    if model.k() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: model.k(),
        });
    }
    let beta = model.beta()[0];

    // Contribution of the point mass at zero.
    let zero_image = match cft {
        Some(c) => c.apply(&[0.0])?,
        None => vec![0.0],
    };
    let rr_at_zero = model.value(&zero_image)?;
    let p0 = dist.zero_mass();
    if p0 >= 1.0 {
        return Ok(ExpectedRr::Finite(rr_at_zero));
    }

    // Tail slope of the transformed exposure, for the divergence verdict and
    // the closed forms. Clamping never alters the upper tail.
    let affine = cft.map_or(Some((1.0, 0.0)), Counterfactual::affine_scalar);
    let untruncated = dist.upper().is_none();

    if model.form() == RiskForm::Exponential && untruncated {
        if let Some((slope, _)) = affine {
            let rate = beta * slope;
            if diverges(dist.family(), rate) {
                return Ok(ExpectedRr::Divergent);
            }
        }
    }

    let needs_quadrature = !(model.form() == RiskForm::Exponential
        && untruncated
        && dist.lower().is_none()
        && affine.is_some()
        && !cft.is_some_and(|c| c.clamp_at_zero()));

    let cont = if needs_quadrature {
        expected_rr_quadrature(dist, model, cft)?
    } else {
        let (slope, offset) = affine.expect("checked above");
        let rate = beta * slope;
        match *dist.family() {
            Family::Gamma { shape, scale } => {
                (beta * offset).exp() * (1.0 - rate * scale).powf(-shape)
            }
            Family::Normal { mean, sd } => {
                (beta * offset).exp() * (rate * mean + 0.5 * rate * rate * sd * sd).exp()
            }
            _ => expected_rr_quadrature(dist, model, cft)?,
        }
    };

    Ok(ExpectedRr::Finite((1.0 - p0) * cont + p0 * rr_at_zero))
}

/// Whether E[exp(rate * X)] is infinite for the untruncated family.
fn diverges(family: &Family, rate: f64) -> bool {
    if rate <= 0.0 {
        return false;
    }
    match *family {
        // The moment generating function of the lognormal is infinite for
        // every positive argument.
        Family::Lognormal { .. } => true,
        Family::Gamma { scale, .. } => rate * scale >= 1.0,
        Family::Weibull { shape, scale } => {
            if shape < 1.0 {
                true
            } else if shape == 1.0 {
                rate * scale >= 1.0
            } else {
                false
            }
        }
        Family::Normal { .. } => false,
    }
}

/// Risk value without the positivity guard; the expectation of a linear form
/// is well defined even where pointwise values dip below zero.
fn raw_rr(form: RiskForm, eta: f64) -> f64 {
    match form {
        RiskForm::Exponential => eta.exp(),
        RiskForm::Linear => 1.0 + eta,
    }
}

fn expected_rr_quadrature(
    dist: &FittedDistribution,
    model: &RelativeRiskModel,
    cft: Option<&Counterfactual>,
) -> Result<f64> {
    let beta = model.beta()[0];
    let form = model.form();
    let parent = dist.family().parent();
    let (lo, up) = dist.support();

    let mass = dist.window_mass();
    if mass < 1e-300 {
        return Err(Error::DomainError(
            "truncation window carries no probability mass".into(),
        ));
    }
    let normalizer = if dist.renormalize() { mass } else { 1.0 };

    let integrand = |x: f64| {
        let g = match cft {
            Some(c) => c.apply(&[x]).expect("dimension checked"),
            None => vec![x],
        };
        raw_rr(form, beta * g[0]) * parent.pdf(x)
    };
    let result = integrate_gk(integrand, lo, up, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)?;
    Ok(result.value / normalizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::fit_moments;
    use crate::FamilyKind;

    fn exp_model(beta: f64) -> RelativeRiskModel {
        RelativeRiskModel::scalar(RiskForm::Exponential, beta, 0.0).unwrap()
    }

    #[test]
    fn gamma_closed_form_matches_published_value() {
        let d = FittedDistribution::new(Family::Gamma {
            shape: 1.15,
            scale: 1.29,
        })
        .unwrap();
        let e = expected_rr(&d, &exp_model(1.27f64.ln()), None)
            .unwrap()
            .finite()
            .unwrap();
        assert!((e - 1.0 / (1.0 - 0.3455)).abs() < 2e-4, "E = {e}");
    }

    #[test]
    fn lognormal_exponential_always_diverges() {
        for (lm, ls) in [(0.05, 0.98), (2.0, 0.1), (-3.0, 4.0)] {
            let d = FittedDistribution::new(Family::Lognormal {
                log_mean: lm,
                log_sd: ls,
            })
            .unwrap();
            assert!(expected_rr(&d, &exp_model(0.01), None)
                .unwrap()
                .is_divergent());
        }
    }

    #[test]
    fn zero_coefficient_gives_unit_risk() {
        for kind in [
            FamilyKind::Gamma,
            FamilyKind::Lognormal,
            FamilyKind::Normal,
            FamilyKind::Weibull,
        ] {
            let d = fit_moments(kind, 1.48, 1.9044).unwrap();
            let e = expected_rr(&d, &exp_model(0.0), None)
                .unwrap()
                .finite()
                .unwrap();
            assert!((e - 1.0).abs() < 1e-10, "{kind:?}: {e}");
        }
    }

    #[test]
    fn gamma_divergence_threshold() {
        let d = FittedDistribution::new(Family::Gamma {
            shape: 2.0,
            scale: 1.0,
        })
        .unwrap();
        assert!(expected_rr(&d, &exp_model(1.0), None).unwrap().is_divergent());
        assert!(expected_rr(&d, &exp_model(0.999), None)
            .unwrap()
            .finite()
            .is_some());
    }

    #[test]
    fn heavy_tailed_weibull_diverges() {
        let d = FittedDistribution::new(Family::Weibull {
            shape: 0.9,
            scale: 1.0,
        })
        .unwrap();
        assert!(expected_rr(&d, &exp_model(1e-3), None).unwrap().is_divergent());
        // shape > 1 has a light tail
        let d = FittedDistribution::new(Family::Weibull {
            shape: 1.2,
            scale: 1.66,
        })
        .unwrap();
        assert!(expected_rr(&d, &exp_model(0.239), None)
            .unwrap()
            .finite()
            .is_some());
    }

    #[test]
    fn truncation_restores_finiteness() {
        let d = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap()
        .truncated(Some(0.0), Some(12.0), true)
        .unwrap();
        let e = expected_rr(&d, &exp_model(1.27f64.ln()), None)
            .unwrap()
            .finite()
            .unwrap();
        assert!(e.is_finite() && e > 1.0);
    }

    #[test]
    fn counterfactual_scaling_matches_rescaled_coefficient() {
        let d = FittedDistribution::new(Family::Gamma {
            shape: 1.15,
            scale: 1.29,
        })
        .unwrap();
        let beta = 1.27f64.ln();
        let scaled = expected_rr(&d, &exp_model(beta), Some(&Counterfactual::scale(0.6)))
            .unwrap()
            .finite()
            .unwrap();
        let direct = expected_rr(&d, &exp_model(0.6 * beta), None)
            .unwrap()
            .finite()
            .unwrap();
        assert!((scaled - direct).abs() < 1e-10);
    }

    #[test]
    fn zero_mass_mixes_in_unit_risk() {
        let d = FittedDistribution::new(Family::Gamma {
            shape: 1.41,
            scale: 0.90,
        })
        .unwrap()
        .with_zero_mass(0.05)
        .unwrap();
        let beta = 1.27f64.ln();
        let mixed = expected_rr(&d, &exp_model(beta), None)
            .unwrap()
            .finite()
            .unwrap();
        let pure = (1.0 - beta * 0.90).powf(-1.41);
        assert!((mixed - (0.05 + 0.95 * pure)).abs() < 1e-10);
    }

    #[test]
    fn full_zero_mass_shortcut() {
        let d = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap()
        .with_zero_mass(1.0)
        .unwrap();
        // Even a divergent family contributes nothing at p0 = 1.
        let e = expected_rr(&d, &exp_model(0.5), None).unwrap();
        assert_eq!(e, ExpectedRr::Finite(1.0));
    }
}
