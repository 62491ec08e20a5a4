//! PIF/PAF estimation: empirical and approximate nonparametric methods with
//! delta-method intervals, parametric standard/mixture baselines, and a
//! discrete brute-force oracle.

mod approximate;
mod discrete;
mod empirical;
mod parametric;

pub use approximate::{approximate_estimate, ApproxMode};
pub use discrete::{discrete_pif, DiscretePmf};
pub use empirical::{empirical_estimate, empirical_mu};
pub use parametric::{mixture_estimate, standard_estimate, true_paf_oracle};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Individual-level exposure observations: an n x k matrix in row-major
/// storage, optionally carrying positive survey weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureSample {
    data: Vec<f64>,
    n: usize,
    k: usize,
    weights: Option<Vec<f64>>,
}

impl ExposureSample {
    /// Scalar exposure from a single column.
    pub fn from_column(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_flat(values, n, 1)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, n, k)
    }

    pub fn from_flat(data: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DegenerateSample);
        }
        if k == 0 || data.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateData("non-finite exposure value".into()));
        }
        Ok(ExposureSample {
            data,
            n,
            k,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::DegenerateData(
                "survey weights must be strictly positive".into(),
            ));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn has_uniform_weights(&self) -> bool {
        match &self.weights {
            None => true,
            Some(w) => w.windows(2).all(|p| p[0] == p[1]),
        }
    }

    /// Total weight; the effective sample size under frequency-weight
    /// semantics. Equals n for unweighted samples.
    pub fn effective_n(&self) -> f64 {
        match &self.weights {
            None => self.n as f64,
            Some(w) => w.iter().sum(),
        }
    }

    /// Normalized weight of row i (all rows sum to one).
    #[inline]
    pub(crate) fn prob(&self, i: usize, total: f64) -> f64 {
        match &self.weights {
            None => 1.0 / total,
            Some(w) => w[i] / total,
        }
    }
}

/// Exposure mean vector, covariance matrix (variance denominators n), and the
/// sample size they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    mean: Vec<f64>,
    cov: Matrix,
    n: usize,
}

impl SummaryStats {
    pub fn new(mean: Vec<f64>, cov: Matrix, n: usize) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        if n < 2 {
            return Err(Error::DegenerateSample);
        }
        if !cov.is_symmetric(1e-12) {
            return Err(Error::InvalidParameters(
                "exposure covariance must be symmetric".into(),
            ));
        }
        for i in 0..cov.nrows() {
            if cov.get(i, i) < 0.0 {
                return Err(Error::InvalidParameters(
                    "exposure variances must be nonnegative".into(),
                ));
            }
        }
        Ok(SummaryStats { mean, cov, n })
    }

    pub fn scalar(mean: f64, var: f64, n: usize) -> Result<Self> {
        Self::new(vec![mean], Matrix::scalar(var), n)
    }

    /// Weighted sample moments with denominator n (not n - 1). For weighted
    /// samples the recorded size is the rounded total weight.
    pub fn from_sample(sample: &ExposureSample) -> Result<Self> {
        let k = sample.k();
        let total = sample.effective_n();
        let mut mean = vec![0.0; k];
        for i in 0..sample.n() {
            let p = sample.prob(i, total);
            for (m, x) in mean.iter_mut().zip(sample.row(i)) {
                *m += p * x;
            }
        }
        let mut cov = Matrix::zeros(k, k);
        for i in 0..sample.n() {
            let p = sample.prob(i, total);
            let row = sample.row(i);
            for a in 0..k {
                for b in a..k {
                    let v = cov.get(a, b) + p * (row[a] - mean[a]) * (row[b] - mean[b]);
                    cov.set(a, b, v);
                    cov.set(b, a, v);
                }
            }
        }
        let n = if sample.has_uniform_weights() {
            sample.n()
        } else {
            total.round().max(2.0) as usize
        };
        Self::new(mean, cov, n)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Paf,
    Pif,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Paf => "PAF",
            Quantity::Pif => "PIF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Empirical,
    Approximate,
    ApproximatePaperSd,
    Standard,
    Mixture,
    DiscreteOracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Empirical => "empirical",
            Method::Approximate => "approximate",
            Method::ApproximatePaperSd => "approximate-sd",
            Method::Standard => "standard",
            Method::Mixture => "mixture",
            Method::DiscreteOracle => "discrete-oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Estimated mean relative risk under the observed exposure.
    pub mu_obs: f64,
    /// Estimated mean relative risk under the counterfactual exposure.
    pub mu_cft: f64,
    /// Set when an expected relative risk is provably infinite.
    pub divergent: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub quantity: Quantity,
    pub point: f64,
    /// Absent for the parametric baselines, which report no uncertainty.
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub level: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_construction_and_access() {
        let s = ExposureSample::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.k(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert!(ExposureSample::from_column(vec![1.0]).is_err());
        assert!(ExposureSample::from_column(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn weights_must_be_positive() {
        let s = ExposureSample::from_column(vec![1.0, 2.0]).unwrap();
        assert!(s.clone().with_weights(vec![1.0, 0.0]).is_err());
        assert!(s.with_weights(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn summary_from_sample_uses_n_denominator() {
        let s = ExposureSample::from_column(vec![1.0, 2.0, 3.0]).unwrap();
        let st = SummaryStats::from_sample(&s).unwrap();
        assert!((st.mean()[0] - 2.0).abs() < 1e-15);
        assert!((st.cov().get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(st.n(), 3);
    }

    #[test]
    fn weighted_moments_match_replication() {
        let weighted = ExposureSample::from_column(vec![1.0, 2.0])
            .unwrap()
            .with_weights(vec![2.0, 1.0])
            .unwrap();
        let replicated = ExposureSample::from_column(vec![1.0, 1.0, 2.0]).unwrap();
        let a = SummaryStats::from_sample(&weighted).unwrap();
        let b = SummaryStats::from_sample(&replicated).unwrap();
        assert!((a.mean()[0] - b.mean()[0]).abs() < 1e-15);
        assert!((a.cov().get(0, 0) - b.cov().get(0, 0)).abs() < 1e-15);
        assert_eq!(a.n(), 3);
    }
}
