//! Brute-force PIF for discrete exposure distributions.

use super::ExposureSample;
use crate::error::{Error, Result};
use crate::rr_models::RelativeRiskModel;

/// A probability mass function as an ordered list of (value, probability)
/// pairs. Order is preserved so that expectations accumulate exactly like the
/// empirical estimator's weighted sums.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    entries: Vec<(Vec<f64>, f64)>,
}

impl DiscretePmf {
    pub fn new(entries: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPmf("empty mass function".into()));
        }
        let k = entries[0].0.len();
        // Kahan summation keeps the tolerance meaningful for large supports.
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for (value, p) in &entries {
            if value.len() != k {
                return Err(Error::InvalidPmf("inconsistent value dimension".into()));
            }
            if !(*p >= 0.0) {
                return Err(Error::InvalidPmf(format!("negative probability {p}")));
            }
            let y = p - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(DiscretePmf { entries })
    }

    /// All mass on a single point.
    pub fn point_mass(value: Vec<f64>) -> Self {
        DiscretePmf {
            entries: vec![(value, 1.0)],
        }
    }

    /// The sample's rows with their normalized weights, in row order.
    pub fn from_sample(sample: &ExposureSample) -> Self {
        let total = sample.effective_n();
        let entries = (0..sample.n())
            .map(|i| (sample.row(i).to_vec(), sample.prob(i, total)))
            .collect();
        DiscretePmf { entries }
    }

    pub fn entries(&self) -> &[(Vec<f64>, f64)] {
        &self.entries
    }

    /// Sum of p_i * RR(x_i) in entry order.
    pub fn expected_rr(&self, model: &RelativeRiskModel) -> Result<f64> {
        let mut acc = 0.0;
        for (value, p) in &self.entries {
            acc += *p * model.value(value)?;
        }
        Ok(acc)
    }
}

/// PIF for categorical exposure: the relative drop in mean relative risk when
/// the observed mass function is replaced by the counterfactual one.
pub fn discrete_pif(
    pmf_obs: &DiscretePmf,
    pmf_cft: &DiscretePmf,
    model: &RelativeRiskModel,
) -> Result<f64> {
    let e_obs = pmf_obs.expected_rr(model)?;
    let e_cft = pmf_cft.expected_rr(model)?;
    if e_obs <= 0.0 {
        return Err(Error::NonPositiveMeanRisk(e_obs));
    }
    Ok((e_obs - e_cft) / e_obs)
}
