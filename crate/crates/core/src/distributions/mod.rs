//! Parametric exposure families with truncation and zero inflation.
//!
//! A [`FittedDistribution`] is a parent family (Gamma, Lognormal, Normal,
//! Weibull) plus an optional truncation window, a renormalization choice for
//! that window, and a point mass at zero. The probability functions here
//! describe the continuous part; the zero mass enters expected relative risk
//! and sampling.

mod expected_rr;
mod fit;
mod sample;

pub use expected_rr::{expected_rr, ExpectedRr};
pub use fit::{fit_mle, fit_moments, log_likelihood};

use crate::error::{Error, Result};
use crate::numerics::normal_quantile;
use statrs::distribution::{Continuous, ContinuousCDF};

/// Family selector used by the fitting entry points and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Gamma,
    Lognormal,
    Normal,
    Weibull,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Gamma => "gamma",
            FamilyKind::Lognormal => "lognormal",
            FamilyKind::Normal => "normal",
            FamilyKind::Weibull => "weibull",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(FamilyKind::Gamma),
            "lognormal" | "log-normal" | "lnorm" => Ok(FamilyKind::Lognormal),
            "normal" | "gaussian" => Ok(FamilyKind::Normal),
            "weibull" => Ok(FamilyKind::Weibull),
            other => Err(Error::InvalidParameters(format!(
                "unknown family '{other}' (expected gamma, lognormal, normal, or weibull)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Shape k, scale theta; mean k*theta.
    Gamma { shape: f64, scale: f64 },
    /// Parameters of ln X.
    Lognormal { log_mean: f64, log_sd: f64 },
    Normal { mean: f64, sd: f64 },
    /// Shape k, scale lambda.
    Weibull { shape: f64, scale: f64 },
}

impl Family {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Gamma { .. } => FamilyKind::Gamma,
            Family::Lognormal { .. } => FamilyKind::Lognormal,
            Family::Normal { .. } => FamilyKind::Normal,
            Family::Weibull { .. } => FamilyKind::Weibull,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            Family::Lognormal { log_mean, log_sd } => log_mean.is_finite() && log_sd > 0.0,
            Family::Normal { mean, sd } => mean.is_finite() && sd > 0.0,
            Family::Weibull { shape, scale } => shape > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!(
                "invalid {} parameters: {self:?}",
                self.kind().name()
            )))
        }
    }

    /// Mean and variance of the untruncated family.
    pub fn mean_var(&self) -> (f64, f64) {
        match *self {
            Family::Gamma { shape, scale } => (shape * scale, shape * scale * scale),
            Family::Lognormal { log_mean, log_sd } => {
                let s2 = log_sd * log_sd;
                let mean = (log_mean + 0.5 * s2).exp();
                (mean, (s2.exp() - 1.0) * (2.0 * log_mean + s2).exp())
            }
            Family::Normal { mean, sd } => (mean, sd * sd),
            Family::Weibull { shape, scale } => {
                let g1 = ln_gamma_fn(1.0 + 1.0 / shape).exp();
                let g2 = ln_gamma_fn(1.0 + 2.0 / shape).exp();
                (scale * g1, scale * scale * (g2 - g1 * g1))
            }
        }
    }

    /// Lower edge of the untruncated support.
    pub fn natural_lower(&self) -> f64 {
        match self {
            Family::Normal { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    pub(crate) fn parent(&self) -> Parent {
        match *self {
            Family::Gamma { shape, scale } => Parent::Gamma(
                statrs::distribution::Gamma::new(shape, 1.0 / scale)
                    .expect("parameters validated at construction"),
            ),
            Family::Lognormal { log_mean, log_sd } => Parent::Lognormal(
                statrs::distribution::LogNormal::new(log_mean, log_sd)
                    .expect("parameters validated at construction"),
            ),
            Family::Normal { mean, sd } => Parent::Normal { mean, sd },
            Family::Weibull { shape, scale } => Parent::Weibull { shape, scale },
        }
    }
}

fn ln_gamma_fn(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Untruncated probability functions of the parent family.
pub(crate) enum Parent {
    Gamma(statrs::distribution::Gamma),
    Lognormal(statrs::distribution::LogNormal),
    Normal { mean: f64, sd: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl Parent {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Parent::Gamma(d) => {
                if x <= 0.0 {
                    0.0
                } else {
                    d.pdf(x)
                }
            }
            Parent::Lognormal(d) => {
                if x <= 0.0 {
                    0.0
                } else {
                    d.pdf(x)
                }
            }
            Parent::Normal { mean, sd } => {
                crate::numerics::normal_pdf((x - mean) / sd) / sd
            }
            Parent::Weibull { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    if *shape < 1.0 {
                        f64::INFINITY
                    } else if *shape == 1.0 {
                        1.0 / scale
                    } else {
                        0.0
                    }
                } else {
                    let z = x / scale;
                    (shape / scale) * z.powf(shape - 1.0) * (-z.powf(*shape)).exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Parent::Gamma(d) => {
                if x <= 0.0 {
                    0.0
                } else {
                    d.cdf(x)
                }
            }
            Parent::Lognormal(d) => {
                if x <= 0.0 {
                    0.0
                } else {
                    d.cdf(x)
                }
            }
            Parent::Normal { mean, sd } => crate::numerics::normal_cdf((x - mean) / sd),
            Parent::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(*shape)).exp_m1()
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        match self {
            Parent::Gamma(d) => d.inverse_cdf(p),
            Parent::Lognormal(d) => d.inverse_cdf(p),
            Parent::Normal { mean, sd } => {
                mean + sd * normal_quantile(p).expect("p clamped to (0, 1)")
            }
            Parent::Weibull { shape, scale } => {
                scale * (-(-p).ln_1p()).powf(1.0 / shape)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    MethodOfMoments,
    MaxLikelihood,
    Manual,
}

impl FitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::MethodOfMoments => "mom",
            FitMethod::MaxLikelihood => "mle",
            FitMethod::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedDistribution {
    family: Family,
    lower: Option<f64>,
    upper: Option<f64>,
    renormalize: bool,
    zero_mass: f64,
    fit_method: FitMethod,
}

impl FittedDistribution {
    /// Untruncated distribution with no zero mass, manually parameterized.
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(FittedDistribution {
            family,
            lower: None,
            upper: None,
            renormalize: true,
            zero_mass: 0.0,
            fit_method: FitMethod::Manual,
        })
    }

    pub(crate) fn with_method(mut self, method: FitMethod) -> Self {
        self.fit_method = method;
        self
    }

    /// Restricts the distribution to [lower, upper]. With `renormalize` the
    /// density is rescaled to integrate to one over the window; without it the
    /// mass outside is simply discarded.
    pub fn truncated(
        mut self,
        lower: Option<f64>,
        upper: Option<f64>,
        renormalize: bool,
    ) -> Result<Self> {
        if let Some(lo) = lower {
            if !(lo >= 0.0 && lo.is_finite()) {
                return Err(Error::InvalidParameters(format!(
                    "truncation lower bound must be finite and >= 0, got {lo}"
                )));
            }
        }
        if let Some(up) = upper {
            if !up.is_finite() {
                return Err(Error::InvalidParameters(
                    "truncation upper bound must be finite".into(),
                ));
            }
            let lo_eff = lower.unwrap_or(self.family.natural_lower());
            if up <= lo_eff {
                return Err(Error::InvalidParameters(format!(
                    "truncation window is empty: [{lo_eff}, {up}]"
                )));
            }
        }
        self.lower = lower;
        self.upper = upper;
        self.renormalize = renormalize;
        Ok(self)
    }

    /// Adds a point mass p0 at zero.
    pub fn with_zero_mass(mut self, p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidParameters(format!(
                "zero mass must be in [0, 1], got {p0}"
            )));
        }
        self.zero_mass = p0;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn lower(&self) -> Option<f64> {
        self.lower
    }

    pub fn upper(&self) -> Option<f64> {
        self.upper
    }

    pub fn renormalize(&self) -> bool {
        self.renormalize
    }

    pub fn zero_mass(&self) -> f64 {
        self.zero_mass
    }

    pub fn fit_method(&self) -> FitMethod {
        self.fit_method
    }

    /// Effective support of the continuous part.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .lower
            .unwrap_or(self.family.natural_lower())
            .max(self.family.natural_lower());
        let up = self.upper.unwrap_or(f64::INFINITY);
        (lo, up)
    }

    /// Parent probability mass inside the truncation window.
    pub(crate) fn window_mass(&self) -> f64 {
        if self.lower.is_none() && self.upper.is_none() {
            return 1.0;
        }
        let parent = self.family.parent();
        let (lo, up) = self.support();
        let f_up = if up.is_infinite() { 1.0 } else { parent.cdf(up) };
        f_up - parent.cdf(lo)
    }

    /// Density of the continuous part. Renormalized truncation divides the
    /// parent density by the window mass; otherwise the parent density is
    /// returned unchanged inside the window. Zero outside the window.
    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, up) = self.support();
        if x < lo || x > up {
            return 0.0;
        }
        let d = self.family.parent().pdf(x);
        if self.renormalize {
            d / self.window_mass()
        } else {
            d
        }
    }

    /// Distribution function of the continuous part (monotone nondecreasing;
    /// reaches 1 at the upper bound only under renormalization).
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, up) = self.support();
        let parent = self.family.parent();
        if x < lo {
            return 0.0;
        }
        let f_lo = parent.cdf(lo);
        let raw = if x >= up {
            self.window_mass()
        } else {
            parent.cdf(x) - f_lo
        };
        if self.renormalize {
            (raw / self.window_mass()).clamp(0.0, 1.0)
        } else {
            raw
        }
    }

    /// Quantile of the renormalized continuous part, used by inverse-CDF
    /// sampling.
    pub fn quantile(&self, p: f64) -> f64 {
        let parent = self.family.parent();
        let (lo, up) = self.support();
        let f_lo = parent.cdf(lo);
        let f_up = if up.is_infinite() { 1.0 } else { parent.cdf(up) };
        let q = f_lo + p * (f_up - f_lo);
        parent.quantile(q.clamp(1e-16, 1.0 - 1e-16))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    #[test]
    fn standard_normal_pdf_value() {
        let d = FittedDistribution::new(Family::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert!((d.pdf(0.0) - 0.3989422804014327).abs() < 1e-10);
    }

    #[test]
    fn exponential_special_case_of_gamma() {
        let theta = 0.7;
        let d = FittedDistribution::new(Family::Gamma {
            shape: 1.0,
            scale: theta,
        })
        .unwrap();
        let expected = (-1.0f64).exp() / theta;
        assert!((d.pdf(theta) - expected).abs() < 1e-12);
    }

    #[test]
    fn renormalized_cdf_hits_zero_and_one() {
        let d = FittedDistribution::new(Family::Normal {
            mean: 1.48,
            sd: 1.38,
        })
        .unwrap()
        .truncated(Some(0.0), Some(12.0), true)
        .unwrap();
        assert_eq!(d.cdf(0.0), 0.0);
        assert!((d.cdf(12.0) - 1.0).abs() < 1e-12);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(20.0), d.cdf(12.0));
    }

    #[test]
    fn renormalized_pdf_integrates_to_one() {
        let cases = vec![
            FittedDistribution::new(Family::Gamma {
                shape: 1.15,
                scale: 1.29,
            })
            .unwrap()
            .truncated(Some(0.0), Some(12.0), true)
            .unwrap(),
            FittedDistribution::new(Family::Lognormal {
                log_mean: 0.05,
                log_sd: 0.98,
            })
            .unwrap()
            .truncated(Some(0.5), Some(8.0), true)
            .unwrap(),
            FittedDistribution::new(Family::Normal {
                mean: 1.48,
                sd: 1.38,
            })
            .unwrap()
            .truncated(Some(0.0), None, true)
            .unwrap(),
            FittedDistribution::new(Family::Weibull {
                shape: 1.2,
                scale: 1.66,
            })
            .unwrap()
            .truncated(Some(1.0), Some(12.0), true)
            .unwrap(),
        ];
        for d in cases {
            let (lo, up) = d.support();
            let total = integrate(|x| d.pdf(x), lo, up).unwrap().value;
            assert!(
                (total - 1.0).abs() < 1e-8,
                "pdf of {:?} integrates to {total}",
                d.family()
            );
        }
    }

    #[test]
    fn non_renormalized_pdf_keeps_parent_density() {
        let d = FittedDistribution::new(Family::Normal {
            mean: 1.48,
            sd: 1.38,
        })
        .unwrap()
        .truncated(Some(0.0), None, false)
        .unwrap();
        let parent = Family::Normal {
            mean: 1.48,
            sd: 1.38,
        }
        .parent();
        assert_eq!(d.pdf(1.0), parent.pdf(1.0));
        assert_eq!(d.pdf(-0.5), 0.0);
    }

    #[test]
    fn weibull_mean_var_closed_form() {
        let (m, v) = Family::Weibull {
            shape: 2.0,
            scale: 3.0,
        }
        .mean_var();
        // Gamma(1.5) = sqrt(pi)/2, Gamma(2) = 1
        let g1 = 0.5 * std::f64::consts::PI.sqrt();
        assert!((m - 3.0 * g1).abs() < 1e-12);
        assert!((v - 9.0 * (1.0 - g1 * g1)).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(FittedDistribution::new(Family::Gamma {
            shape: -1.0,
            scale: 1.0
        })
        .is_err());
        assert!(FittedDistribution::new(Family::Lognormal {
            log_mean: 0.0,
            log_sd: 0.0
        })
        .is_err());
        let d = FittedDistribution::new(Family::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert!(d.clone().truncated(Some(-1.0), None, true).is_err());
        assert!(d.clone().truncated(Some(5.0), Some(2.0), true).is_err());
        assert!(d.clone().with_zero_mass(1.5).is_err());
    }

    #[test]
    fn quantile_respects_truncation() {
        let d = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap()
        .truncated(Some(0.0), Some(12.0), true)
        .unwrap();
        assert!(d.quantile(0.9999) <= 12.0 + 1e-9);
        let mid = d.quantile(0.5);
        assert!((d.cdf(mid) - 0.5).abs() < 1e-9);
    }
}
