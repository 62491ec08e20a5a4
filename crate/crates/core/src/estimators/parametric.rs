//! Parametric baselines: the standard method and the zero-inflated mixture
//! method, plus the quadrature ground truth used by the simulation harness.

use super::{Diagnostics, EstimateResult, Method, Quantity};
use crate::distributions::{expected_rr, ExpectedRr, FittedDistribution};
use crate::error::{Error, Result};
use crate::rr_models::{Counterfactual, RelativeRiskModel};

/// The standard method: integrate the relative risk against a parametric
/// exposure fit. Reports no standard error.
///
/// A divergent observed-mean relative risk (the heavy-tail case) yields the
/// limiting point 1 with the divergent flag set rather than an error.
pub fn standard_estimate(
    dist: &FittedDistribution,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
) -> Result<EstimateResult> {
    let e_obs = expected_rr(dist, model, None)?;
    let e_cft = if cft.is_zero() {
        ExpectedRr::Finite(1.0)
    } else {
        expected_rr(dist, model, Some(cft))?
    };

    let quantity = if cft.is_zero() {
        Quantity::Paf
    } else {
        Quantity::Pif
    };
    let mut notes = Vec::new();
    let (point, divergent, mu_obs, mu_cft) = match (e_obs, e_cft) {
        (ExpectedRr::Finite(o), ExpectedRr::Finite(c)) => {
            if o <= 0.0 {
                return Err(Error::NonPositiveMeanRisk(o));
            }
            (1.0 - c / o, false, o, c)
        }
        (ExpectedRr::Divergent, ExpectedRr::Finite(c)) => {
            notes.push(
                "observed mean relative risk diverges; reporting the limiting value 1".into(),
            );
            (1.0, true, f64::INFINITY, c)
        }
        (ExpectedRr::Divergent, ExpectedRr::Divergent) => {
            notes.push(
                "observed and counterfactual mean relative risks both diverge; \
                 a truncation bound is required for a finite estimate"
                    .into(),
            );
            (1.0, true, f64::INFINITY, f64::INFINITY)
        }
        (ExpectedRr::Finite(o), ExpectedRr::Divergent) => {
            notes.push(
                "counterfactual mean relative risk diverges while the observed one is finite"
                    .into(),
            );
            (f64::NAN, true, o, f64::INFINITY)
        }
    };

    Ok(EstimateResult {
        quantity,
        point,
        se: None,
        ci: None,
        level: 0.0,
        method: Method::Standard,
        diagnostics: Diagnostics {
            mu_obs,
            mu_cft,
            divergent,
            notes,
        },
    })
}

/// The mixture method: a point mass p0 at zero plus a parametric density for
/// the positive values, truncated at `m` when given.
pub fn mixture_estimate(
    p0: f64,
    dist: &FittedDistribution,
    model: &RelativeRiskModel,
    m: Option<f64>,
) -> Result<EstimateResult> {
    let mixed = match m {
        Some(bound) => dist
            .clone()
            .truncated(Some(0.0), Some(bound), true)?
            .with_zero_mass(p0)?,
        None => dist.clone().with_zero_mass(p0)?,
    };

    let mut notes = Vec::new();
    let (point, divergent, e) = match expected_rr(&mixed, model, None)? {
        ExpectedRr::Finite(e) => {
            if e <= 0.0 {
                return Err(Error::NonPositiveMeanRisk(e));
            }
            (1.0 - 1.0 / e, false, e)
        }
        ExpectedRr::Divergent => {
            notes.push(
                "mean relative risk diverges without a truncation bound; \
                 reporting the limiting value 1"
                    .into(),
            );
            (1.0, true, f64::INFINITY)
        }
    };

    Ok(EstimateResult {
        quantity: Quantity::Paf,
        point,
        se: None,
        ci: None,
        level: 0.0,
        method: Method::Mixture,
        diagnostics: Diagnostics {
            mu_obs: e,
            mu_cft: 1.0,
            divergent,
            notes,
        },
    })
}

/// Ground-truth PAF of a fully specified generating distribution, evaluated
/// to quadrature tolerance. Errors if the expected relative risk diverges.
pub fn true_paf_oracle(dist: &FittedDistribution, model: &RelativeRiskModel) -> Result<f64> {
    match expected_rr(dist, model, None)? {
        ExpectedRr::Finite(e) => {
            if e <= 0.0 {
                Err(Error::NonPositiveMeanRisk(e))
            } else {
                Ok(1.0 - 1.0 / e)
            }
        }
        ExpectedRr::Divergent => Err(Error::DomainError(
            "true PAF undefined: expected relative risk diverges; add a truncation bound".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{fit_moments, Family, FamilyKind};
    use crate::rr_models::RiskForm;

    fn published_model() -> RelativeRiskModel {
        RelativeRiskModel::scalar(RiskForm::Exponential, 1.27f64.ln(), 0.0443).unwrap()
    }

    #[test]
    fn standard_gamma_paf() {
        let d = fit_moments(FamilyKind::Gamma, 1.48, 1.38 * 1.38).unwrap();
        let r = standard_estimate(&d, &published_model(), &Counterfactual::zero()).unwrap();
        assert!((r.point - 0.345).abs() < 1e-3, "point = {}", r.point);
        assert!(!r.diagnostics.divergent);
        assert!(r.se.is_none() && r.ci.is_none());
    }

    #[test]
    fn standard_lognormal_diverges_to_one() {
        let d = fit_moments(FamilyKind::Lognormal, 1.48, 1.38 * 1.38).unwrap();
        let r = standard_estimate(&d, &published_model(), &Counterfactual::zero()).unwrap();
        assert_eq!(r.point, 1.0);
        assert!(r.diagnostics.divergent);
    }

    #[test]
    fn standard_truncated_normal_paf() {
        let d = fit_moments(FamilyKind::Normal, 1.48, 1.38 * 1.38)
            .unwrap()
            .truncated(Some(0.0), None, true)
            .unwrap();
        let r = standard_estimate(&d, &published_model(), &Counterfactual::zero()).unwrap();
        assert!((r.point - 0.380).abs() < 2e-3, "point = {}", r.point);
    }

    #[test]
    fn mixture_lognormal_with_and_without_bound() {
        let d = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap();
        let bounded = mixture_estimate(0.05, &d, &published_model(), Some(12.0)).unwrap();
        assert!((bounded.point - 0.379).abs() < 2e-3, "point = {}", bounded.point);
        assert!(!bounded.diagnostics.divergent);

        let unbounded = mixture_estimate(0.05, &d, &published_model(), None).unwrap();
        assert_eq!(unbounded.point, 1.0);
        assert!(unbounded.diagnostics.divergent);
    }

    #[test]
    fn mixture_fully_unexposed() {
        let d = FittedDistribution::new(Family::Gamma {
            shape: 1.41,
            scale: 0.90,
        })
        .unwrap();
        let r = mixture_estimate(1.0, &d, &published_model(), Some(12.0)).unwrap();
        assert_eq!(r.point, 0.0);
    }

    #[test]
    fn oracle_values() {
        let ln = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap()
        .truncated(Some(0.0), Some(12.0), true)
        .unwrap()
        .with_zero_mass(0.05)
        .unwrap();
        let p = true_paf_oracle(&ln, &published_model()).unwrap();
        assert!((p - 0.38).abs() < 5e-3, "lognormal oracle {p}");

        let degenerate = FittedDistribution::new(Family::Gamma {
            shape: 1.0,
            scale: 1.0,
        })
        .unwrap()
        .with_zero_mass(1.0)
        .unwrap();
        assert_eq!(true_paf_oracle(&degenerate, &published_model()).unwrap(), 0.0);

        let heavy = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap();
        assert!(true_paf_oracle(&heavy, &published_model()).is_err());
    }

    #[test]
    fn scaled_counterfactual_pif_below_paf() {
        let d = fit_moments(FamilyKind::Gamma, 1.48, 1.38 * 1.38).unwrap();
        let m = published_model();
        let paf = standard_estimate(&d, &m, &Counterfactual::zero()).unwrap();
        let pif = standard_estimate(&d, &m, &Counterfactual::scale(0.6)).unwrap();
        assert_eq!(pif.quantity, Quantity::Pif);
        assert!(0.0 < pif.point && pif.point < paf.point);
    }
}
