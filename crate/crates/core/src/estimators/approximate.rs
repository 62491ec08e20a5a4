//! Second-order estimation from exposure summary statistics.

use super::{Diagnostics, EstimateResult, Method, Quantity, SummaryStats};
use crate::error::{Error, Result};
use crate::numerics::{finite_difference_gradient, z_for_level};
use crate::rr_models::{Counterfactual, RelativeRiskModel, RiskForm};

/// How the second-moment correction enters the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMode {
    /// The second-order Taylor form: the correction is scaled by the exposure
    /// variance (covariances for vector exposure). The default.
    TaylorVariance,
    /// The simplified scalar exponential form with the standard deviation in
    /// place of the variance, matching the published illustrative numbers.
    /// Scalar exponential models only.
    PaperSd,
}

impl ApproxMode {
    pub fn name(&self) -> &'static str {
        match self {
            ApproxMode::TaylorVariance => "taylor",
            ApproxMode::PaperSd => "paper-sd",
        }
    }
}

/// Approximate PIF/PAF from the exposure mean and covariance.
///
/// The point estimate expands the mean relative risk to second order around
/// the exposure mean. The standard error propagates (mean, variance,
/// coefficient) uncertainty by the delta method with a diagonal covariance:
/// Var(mean) = v/n, Var(v) = 3v^2/n - v^{3/2}(n-3)/(n(n-1)), and the
/// coefficient covariance as reported. Cross terms vanish because the
/// coefficients come from an independent study.
pub fn approximate_estimate(
    stats: &SummaryStats,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
    level: f64,
    mode: ApproxMode,
) -> Result<EstimateResult> {
    let z = z_for_level(level)?;
    let k = model.k();
    if stats.mean().len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: stats.mean().len(),
        });
    }
    if mode == ApproxMode::PaperSd && (k != 1 || model.form() != RiskForm::Exponential) {
        return Err(Error::UnsupportedMode(
            "the standard-deviation form needs a scalar exponential model".into(),
        ));
    }

    // Differentiability of g at the mean is required by the expansion.
    let derivs = cft.derivs(stats.mean()).map_err(|e| match e {
        Error::NonDifferentiableAtPoint => Error::UnsupportedMode(
            "counterfactual is not twice differentiable at the exposure mean".into(),
        ),
        other => other,
    })?;
    let slope = derivs.jacobian.get(0, 0);

    let mut notes = Vec::new();
    let (point, mu_obs, mu_cft, var) = if k == 1 {
        scalar_estimate(stats, model, cft, slope, mode)?
    } else {
        let (point, mu_obs, mu_cft) = taylor_point(stats, model, cft)?;
        notes.push(
            "vector exposure: variance-of-variance term omitted from the delta method".into(),
        );
        let var = vector_variance(stats, model, cft)?;
        (point, mu_obs, mu_cft, var)
    };

    let se = var.max(0.0).sqrt();
    Ok(EstimateResult {
        quantity: if cft.is_zero() {
            Quantity::Paf
        } else {
            Quantity::Pif
        },
        point,
        se: Some(se),
        ci: Some((point - z * se, point + z * se)),
        level,
        method: match mode {
            ApproxMode::TaylorVariance => Method::Approximate,
            ApproxMode::PaperSd => Method::ApproximatePaperSd,
        },
        diagnostics: Diagnostics {
            mu_obs,
            mu_cft,
            divergent: false,
            notes,
        },
    })
}

/// General second-order point estimate: RR(g(mean)) plus half the trace of
/// cov times the Hessian of RR compose g (the transforms are affine, so their
/// second derivatives vanish).
fn taylor_point(
    stats: &SummaryStats,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
) -> Result<(f64, f64, f64)> {
    let k = model.k();
    let mean = stats.mean();
    let cov = stats.cov();

    let h_obs = model.hess_x(mean)?;
    let mut mu_obs = model.value(mean)?;
    for i in 0..k {
        for j in 0..k {
            mu_obs += 0.5 * cov.get(i, j) * h_obs.get(i, j);
        }
    }

    let g_mean = cft.apply(mean)?;
    let jac = cft.derivs(mean)?.jacobian;
    let h_at_g = model.hess_x(&g_mean)?;
    let h_cft = h_at_g.sandwich(&jac_transpose(&jac));
    let mut mu_cft = model.value(&g_mean)?;
    for i in 0..k {
        for j in 0..k {
            mu_cft += 0.5 * cov.get(i, j) * h_cft.get(i, j);
        }
    }

    if mu_obs <= 0.0 {
        return Err(Error::NonPositiveMeanRisk(mu_obs));
    }
    Ok((1.0 - mu_cft / mu_obs, mu_obs, mu_cft))
}

// sandwich computes J A J'; the chain rule needs J' H J, so transpose first.
fn jac_transpose(j: &crate::linalg::Matrix) -> crate::linalg::Matrix {
    let mut t = crate::linalg::Matrix::zeros(j.ncols(), j.nrows());
    for r in 0..j.nrows() {
        for c in 0..j.ncols() {
            t.set(c, r, j.get(r, c));
        }
    }
    t
}

/// Scalar path: closed-form numerator/denominator and their analytic partial
/// derivatives in (mean, variance, coefficient).
fn scalar_estimate(
    stats: &SummaryStats,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
    slope: f64,
    mode: ApproxMode,
) -> Result<(f64, f64, f64, f64)> {
    let m = stats.mean()[0];
    let v = stats.cov().get(0, 0);
    let n = stats.n() as f64;
    let beta = model.beta()[0];
    let var_beta = model.beta_cov().get(0, 0);

    let offset = cft.apply(&[m])?[0] - slope * m;
    let a = slope;
    let d = offset;

    // Correction scale and its derivative in the variance.
    let (s, ds_dv) = match mode {
        ApproxMode::TaylorVariance => (v, 1.0),
        ApproxMode::PaperSd => {
            if v == 0.0 {
                (0.0, 0.0)
            } else {
                (v.sqrt(), 0.5 / v.sqrt())
            }
        }
    };

    // Denominator D = mu_obs, numerator N = mu_cft, and partials.
    let (den, dd_m, dd_v, dd_b, num, dn_m, dn_v, dn_b) = match model.form() {
        RiskForm::Exponential => {
            let e_obs = (beta * m).exp();
            let den = e_obs * (1.0 + 0.5 * beta * beta * s);
            let dd_m = beta * den;
            let dd_v = e_obs * 0.5 * beta * beta * ds_dv;
            let dd_b = m * den + e_obs * beta * s;

            let e_cft = (beta * (a * m + d)).exp();
            let num = e_cft * (1.0 + 0.5 * beta * beta * a * a * s);
            let dn_m = beta * a * num;
            let dn_v = e_cft * 0.5 * beta * beta * a * a * ds_dv;
            let dn_b = (a * m + d) * num + e_cft * beta * a * a * s;
            (den, dd_m, dd_v, dd_b, num, dn_m, dn_v, dn_b)
        }
        RiskForm::Linear => {
            // Zero Hessian: the expansion is exact and variance-free.
            let den = 1.0 + beta * m;
            let num = 1.0 + beta * (a * m + d);
            (den, beta, 0.0, m, num, beta * a, 0.0, a * m + d)
        }
    };

    if den <= 0.0 {
        return Err(Error::NonPositiveMeanRisk(den));
    }
    let point = 1.0 - num / den;

    // h = 1 - N/D  =>  dh/dz = (N dD - D dN) / D^2
    let dsq = den * den;
    let h_m = (num * dd_m - den * dn_m) / dsq;
    let h_v = (num * dd_v - den * dn_v) / dsq;
    let h_b = (num * dd_b - den * dn_b) / dsq;

    let var_mean = v / n;
    let var_var = if v == 0.0 {
        0.0
    } else {
        3.0 * v * v / n - v.powf(1.5) * (n - 3.0) / (n * (n - 1.0))
    };
    let var = h_m * h_m * var_mean + h_v * h_v * var_var + h_b * h_b * var_beta;
    Ok((point, den, num, var))
}

/// Vector exposure: delta method over (mean, coefficients) with the gradient
/// of the point estimate taken by central differences.
fn vector_variance(
    stats: &SummaryStats,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
) -> Result<f64> {
    let k = model.k();
    let n = stats.n() as f64;
    let mean0 = stats.mean().to_vec();
    let beta0 = model.beta().to_vec();

    let point_at = |z: &[f64]| -> f64 {
        let mean = &z[..k];
        let beta = &z[k..];
        let m = RelativeRiskModel::new(
            model.form(),
            beta.to_vec(),
            model.beta_cov().clone(),
        )
        .expect("covariance already validated");
        let s = SummaryStats::new(mean.to_vec(), stats.cov().clone(), stats.n())
            .expect("covariance already validated");
        match taylor_point(&s, &m, cft) {
            Ok((p, _, _)) => p,
            Err(_) => f64::NAN,
        }
    };

    let z0: Vec<f64> = mean0.iter().chain(beta0.iter()).copied().collect();
    let grad = finite_difference_gradient(&point_at, &z0);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::DomainError(
            "point estimate not differentiable at the summary statistics".into(),
        ));
    }

    let g_mean = &grad[..k];
    let g_beta = &grad[k..];
    let mut var = 0.0;
    for i in 0..k {
        for j in 0..k {
            var += g_mean[i] * stats.cov().get(i, j) * g_mean[j] / n;
            var += g_beta[i] * model.beta_cov().get(i, j) * g_beta[j];
        }
    }
    Ok(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    const MEAN: f64 = 1.48;
    const VAR: f64 = 1.38 * 1.38;
    const N: usize = 7762;

    fn published_model() -> RelativeRiskModel {
        RelativeRiskModel::scalar(RiskForm::Exponential, 1.27f64.ln(), 0.0443).unwrap()
    }

    #[test]
    fn paper_sd_reproduces_illustrative_numbers() {
        let stats = SummaryStats::scalar(MEAN, VAR, N).unwrap();
        let r = approximate_estimate(
            &stats,
            &published_model(),
            &Counterfactual::zero(),
            0.95,
            ApproxMode::PaperSd,
        )
        .unwrap();
        assert!((r.point - 0.325).abs() < 2e-3, "point = {}", r.point);
        let (lo, hi) = r.ci.unwrap();
        assert!((lo - 0.219).abs() < 5e-3, "lo = {lo}");
        assert!((hi - 0.431).abs() < 5e-3, "hi = {hi}");
    }

    #[test]
    fn taylor_mode_hand_value() {
        let stats = SummaryStats::scalar(MEAN, VAR, N).unwrap();
        let r = approximate_estimate(
            &stats,
            &published_model(),
            &Counterfactual::zero(),
            0.95,
            ApproxMode::TaylorVariance,
        )
        .unwrap();
        let beta = 1.27f64.ln();
        let expected = 1.0 - 1.0 / ((beta * MEAN).exp() * (1.0 + 0.5 * beta * beta * VAR));
        assert!((r.point - expected).abs() < 1e-12);
        assert!((r.point - 0.334).abs() < 2e-3);
    }

    #[test]
    fn zero_variance_collapses_to_point_mass() {
        let stats = SummaryStats::scalar(MEAN, 0.0, N).unwrap();
        let beta = 1.27f64.ln();
        for mode in [ApproxMode::TaylorVariance, ApproxMode::PaperSd] {
            let r = approximate_estimate(
                &stats,
                &published_model(),
                &Counterfactual::zero(),
                0.95,
                mode,
            )
            .unwrap();
            assert!((r.point - (1.0 - (-beta * MEAN).exp())).abs() < 1e-12);
            assert!(r.se.unwrap().is_finite());
        }
    }

    #[test]
    fn identity_counterfactual_is_zero() {
        let stats = SummaryStats::scalar(MEAN, VAR, N).unwrap();
        let r = approximate_estimate(
            &stats,
            &published_model(),
            &Counterfactual::identity(),
            0.95,
            ApproxMode::TaylorVariance,
        )
        .unwrap();
        assert_eq!(r.point, 0.0);
    }

    #[test]
    fn paper_sd_rejects_vector_and_linear_models() {
        let stats = SummaryStats::scalar(MEAN, VAR, N).unwrap();
        let linear = RelativeRiskModel::scalar(RiskForm::Linear, 0.1, 0.0).unwrap();
        assert!(matches!(
            approximate_estimate(
                &stats,
                &linear,
                &Counterfactual::zero(),
                0.95,
                ApproxMode::PaperSd
            ),
            Err(Error::UnsupportedMode(_))
        ));
    }

    #[test]
    fn clamped_counterfactual_rejected_at_kink() {
        let stats = SummaryStats::scalar(1.0, 0.5, 100).unwrap();
        let m = RelativeRiskModel::scalar(RiskForm::Exponential, 0.2, 0.01).unwrap();
        let cft = Counterfactual::shift_scalar(-2.0).clamped();
        assert!(matches!(
            approximate_estimate(&stats, &m, &cft, 0.95, ApproxMode::TaylorVariance),
            Err(Error::UnsupportedMode(_))
        ));
        // away from the kink the clamp is inactive and the estimate goes through
        let cft_ok = Counterfactual::shift_scalar(-0.5).clamped();
        assert!(
            approximate_estimate(&stats, &m, &cft_ok, 0.95, ApproxMode::TaylorVariance).is_ok()
        );
    }

    #[test]
    fn linear_form_needs_no_variance_correction() {
        let stats = SummaryStats::scalar(2.0, 5.0, 50).unwrap();
        let m = RelativeRiskModel::scalar(RiskForm::Linear, 0.5, 0.0).unwrap();
        let r = approximate_estimate(
            &stats,
            &m,
            &Counterfactual::zero(),
            0.95,
            ApproxMode::TaylorVariance,
        )
        .unwrap();
        assert!((r.point - (1.0 - 1.0 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn vector_exposure_taylor() {
        let stats = SummaryStats::new(
            vec![1.0, 2.0],
            Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.8]]).unwrap(),
            500,
        )
        .unwrap();
        let model = RelativeRiskModel::new(
            RiskForm::Exponential,
            vec![0.2, 0.1],
            Matrix::from_diag(&[0.01f64.powi(2), 0.02f64.powi(2)]),
        )
        .unwrap();
        let r = approximate_estimate(
            &stats,
            &model,
            &Counterfactual::zero(),
            0.95,
            ApproxMode::TaylorVariance,
        )
        .unwrap();
        // mu_obs = exp(b'm)(1 + 0.5 b' S b)
        let eta: f64 = 0.2 * 1.0 + 0.1 * 2.0;
        let quad = 0.2 * 0.2 * 0.5 + 2.0 * 0.2 * 0.1 * 0.1 + 0.1 * 0.1 * 0.8;
        let mu = eta.exp() * (1.0 + 0.5 * quad);
        assert!((r.point - (1.0 - 1.0 / mu)).abs() < 1e-12);
        assert!(r.se.unwrap() > 0.0);
        assert!(!r.diagnostics.notes.is_empty());
    }

    #[test]
    fn scale_counterfactual_matches_simplified_display() {
        let stats = SummaryStats::scalar(MEAN, VAR, N).unwrap();
        let beta = 1.27f64.ln();
        let a = 0.6;
        let r = approximate_estimate(
            &stats,
            &published_model(),
            &Counterfactual::scale(a),
            0.95,
            ApproxMode::PaperSd,
        )
        .unwrap();
        let sd = VAR.sqrt();
        let num = (beta * a * MEAN).exp() * (1.0 + 0.5 * sd * beta * beta * a * a);
        let den = (beta * MEAN).exp() * (1.0 + 0.5 * beta * beta * sd);
        assert!((r.point - (1.0 - num / den)).abs() < 1e-12);
    }
}
