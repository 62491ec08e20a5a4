//! Plug-in estimation from individual-level exposure data.

use super::{Diagnostics, EstimateResult, ExposureSample, Method, Quantity};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numerics::z_for_level;
use crate::rr_models::{Counterfactual, RelativeRiskModel};

/// Weighted mean of RR(g(X_i)); g is the identity when `cft` is absent.
///
/// Accumulates normalized-weight products in row order, so an unweighted
/// sample reproduces the discrete oracle's expectation bit for bit.
pub fn empirical_mu(
    sample: &ExposureSample,
    model: &RelativeRiskModel,
    cft: Option<&Counterfactual>,
) -> Result<f64> {
    let total = sample.effective_n();
    let mut acc = 0.0;
    for i in 0..sample.n() {
        let rr = match cft {
            Some(c) => model.value(&c.apply(sample.row(i))?)?,
            None => model.value(sample.row(i))?,
        };
        acc += sample.prob(i, total) * rr;
    }
    Ok(acc)
}

/// The empirical PIF estimator 1 - mu_cft / mu_obs (PAF when the
/// counterfactual is full elimination), with a delta-method interval.
///
/// The variance combines the sampling variance of the mean relative risks
/// (denominator the effective sample size) with the propagated coefficient
/// covariance, evaluated at the estimated coefficients.
pub fn empirical_estimate(
    sample: &ExposureSample,
    model: &RelativeRiskModel,
    cft: &Counterfactual,
    level: f64,
) -> Result<EstimateResult> {
    let z = z_for_level(level)?;
    if sample.k() != model.k() {
        return Err(Error::DimensionMismatch {
            expected: model.k(),
            got: sample.k(),
        });
    }

    let k = model.k();
    let n_eff = sample.effective_n();
    let total = n_eff;

    // Single pass: first and second moments of the observed and
    // counterfactual relative risks, plus mean coefficient gradients.
    let mut mu_obs = 0.0;
    let mut mu_cft = 0.0;
    let mut sq_obs = 0.0;
    let mut sq_cft = 0.0;
    let mut cross = 0.0;
    let mut grad_obs = vec![0.0; k];
    let mut grad_cft = vec![0.0; k];

    for i in 0..sample.n() {
        let p = sample.prob(i, total);
        let x = sample.row(i);
        let g = cft.apply(x)?;
        let rr_o = model.value(x)?;
        let rr_c = model.value(&g)?;
        mu_obs += p * rr_o;
        mu_cft += p * rr_c;
        sq_obs += p * rr_o * rr_o;
        sq_cft += p * rr_c * rr_c;
        cross += p * rr_o * rr_c;
        let go = model.grad_beta(x)?;
        let gc = model.grad_beta(&g)?;
        for j in 0..k {
            grad_obs[j] += p * go[j];
            grad_cft[j] += p * gc[j];
        }
    }

    if mu_obs <= 0.0 {
        return Err(Error::NonPositiveMeanRisk(mu_obs));
    }

    let beta_cov = model.beta_cov();
    let var = if cft.is_zero() {
        // PAF path: Var(mu_obs) / mu_obs^4
        let var_rr = sq_obs - mu_obs * mu_obs;
        let var_mu = var_rr / n_eff + beta_cov.quad_form(&grad_obs);
        var_mu / mu_obs.powi(4)
    } else {
        // PIF path: d' (Sigma1 / n + Sigma2) d
        let v11 = sq_obs - mu_obs * mu_obs;
        let v22 = sq_cft - mu_cft * mu_cft;
        let v12 = cross - mu_obs * mu_cft;
        let mut j = Matrix::zeros(2, k);
        for c in 0..k {
            j.set(0, c, grad_obs[c]);
            j.set(1, c, grad_cft[c]);
        }
        let sigma2 = beta_cov.sandwich(&j);
        let d = [mu_cft / (mu_obs * mu_obs), -1.0 / mu_obs];
        let s11 = v11 / n_eff + sigma2.get(0, 0);
        let s12 = v12 / n_eff + sigma2.get(0, 1);
        let s22 = v22 / n_eff + sigma2.get(1, 1);
        d[0] * d[0] * s11 + 2.0 * d[0] * d[1] * s12 + d[1] * d[1] * s22
    };
    // Guard against tiny negative values from cancellation.
    let se = var.max(0.0).sqrt();

    let point = 1.0 - mu_cft / mu_obs;
    let mut notes = Vec::new();
    if !sample.has_uniform_weights() {
        notes.push(format!(
            "non-uniform survey weights treated as frequency weights (effective n = {n_eff:.1})"
        ));
    }

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
        method: Method::Empirical,
        diagnostics: Diagnostics {
            mu_obs,
            mu_cft,
            divergent: false,
            notes,
        },
    })
}
