//! Relative risk functions and counterfactual exposure transformations.
//!
//! A relative risk model pairs a functional form with the exposure
//! coefficients and their covariance. Intercepts are excluded: they cancel in
//! every risk ratio, so only the coefficients multiplying the exposure enter.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numerics::z_for_level;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskForm {
    /// RR(x; b) = exp(b'x), as arising from logistic, Poisson, or Cox models.
    Exponential,
    /// RR(x; b) = 1 + b'x, as arising from linear models.
    Linear,
}

#[derive(Debug, Clone)]
pub struct RelativeRiskModel {
    form: RiskForm,
    beta: Vec<f64>,
    beta_cov: Matrix,
}

impl RelativeRiskModel {
    /// Builds a model, validating that `beta_cov` is a symmetric positive
    /// semi-definite k x k matrix matching the coefficient dimension.
    pub fn new(form: RiskForm, beta: Vec<f64>, beta_cov: Matrix) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidParameters(
                "coefficient vector must be non-empty".into(),
            ));
        }
        if beta_cov.nrows() != beta.len() || beta_cov.ncols() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: beta.len(),
                got: beta_cov.nrows(),
            });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameters("non-finite coefficient".into()));
        }
        if !beta_cov.is_symmetric(1e-12) {
            return Err(Error::InvalidParameters(
                "coefficient covariance must be symmetric".into(),
            ));
        }
        if !beta_cov.is_psd(1e-10) {
            return Err(Error::InvalidParameters(
                "coefficient covariance must be positive semi-definite".into(),
            ));
        }
        Ok(RelativeRiskModel {
            form,
            beta,
            beta_cov,
        })
    }

    /// Scalar-exposure model from a coefficient and its standard error.
    pub fn scalar(form: RiskForm, beta: f64, se: f64) -> Result<Self> {
        if se < 0.0 {
            return Err(Error::InvalidParameters(
                "standard error must be nonnegative".into(),
            ));
        }
        Self::new(form, vec![beta], Matrix::scalar(se * se))
    }

    /// Exponential scalar model from a published relative risk and its
    /// confidence interval: beta = ln RR, se = (ln upper - ln lower) / (2 z).
    pub fn from_rr_ci(rr: f64, ci: (f64, f64), level: f64) -> Result<Self> {
        let (lo, hi) = ci;
        if !(rr > 0.0 && lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameters(format!(
                "need rr > 0 and 0 < lower < upper, got rr={rr}, ci=({lo}, {hi})"
            )));
        }
        let z = z_for_level(level)?;
        let se = (hi.ln() - lo.ln()) / (2.0 * z);
        Self::scalar(RiskForm::Exponential, rr.ln(), se)
    }

    pub fn form(&self) -> RiskForm {
        self.form
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_cov(&self) -> &Matrix {
        &self.beta_cov
    }

    /// Exposure dimension k.
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.beta.iter().zip(x).map(|(b, xi)| b * xi).sum()
    }

    /// RR(x; beta). Exactly 1 when beta'x = 0.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let eta = self.linear_predictor(x);
        match self.form {
            RiskForm::Exponential => Ok(eta.exp()),
            RiskForm::Linear => {
                let rr = 1.0 + eta;
                if rr <= 0.0 {
                    Err(Error::NonPositiveRisk { value: rr })
                } else {
                    Ok(rr)
                }
            }
        }
    }

    /// Gradient of RR with respect to the coefficients.
    pub fn grad_beta(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match self.form {
            RiskForm::Exponential => {
                let v = self.linear_predictor(x).exp();
                Ok(x.iter().map(|xi| xi * v).collect())
            }
            RiskForm::Linear => Ok(x.to_vec()),
        }
    }

    /// Hessian of RR with respect to the exposure (symmetric k x k).
    pub fn hess_x(&self, x: &[f64]) -> Result<Matrix> {
        self.check_dim(x)?;
        let k = self.k();
        match self.form {
            RiskForm::Exponential => {
                let v = self.linear_predictor(x).exp();
                let mut h = Matrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        h.set(i, j, self.beta[i] * self.beta[j] * v);
                    }
                }
                Ok(h)
            }
            RiskForm::Linear => Ok(Matrix::zeros(k, k)),
        }
    }
}

/// The transformation g mapping observed exposure to counterfactual exposure.
#[derive(Debug, Clone, PartialEq)]
pub enum CftKind {
    /// g(x) = 0: full elimination, the attributable-fraction counterfactual.
    Zero,
    /// g(x) = x: no change.
    Identity,
    /// g(x) = a * x, e.g. a = 0.6 for a 40% reduction.
    Scale(f64),
    /// g(x) = x + d componentwise.
    Shift(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    kind: CftKind,
    clamp_at_zero: bool,
}

/// First and second derivatives of g at a point. The supported kinds are
/// affine wherever differentiable, so the per-component Hessians are zero.
#[derive(Debug, Clone)]
pub struct CftDerivs {
    pub jacobian: Matrix,
    pub hessians: Vec<Matrix>,
}

impl Counterfactual {
    pub fn zero() -> Self {
        Counterfactual {
            kind: CftKind::Zero,
            clamp_at_zero: false,
        }
    }

    pub fn identity() -> Self {
        Counterfactual {
            kind: CftKind::Identity,
            clamp_at_zero: false,
        }
    }

    pub fn scale(factor: f64) -> Self {
        Counterfactual {
            kind: CftKind::Scale(factor),
            clamp_at_zero: false,
        }
    }

    pub fn shift(offset: Vec<f64>) -> Self {
        Counterfactual {
            kind: CftKind::Shift(offset),
            clamp_at_zero: false,
        }
    }

    /// Scalar shift, the common one-dimensional case.
    pub fn shift_scalar(offset: f64) -> Self {
        Self::shift(vec![offset])
    }

    /// Floors each transformed component at zero.
    pub fn clamped(mut self) -> Self {
        self.clamp_at_zero = true;
        self
    }

    pub fn kind(&self) -> &CftKind {
        &self.kind
    }

    pub fn clamp_at_zero(&self) -> bool {
        self.clamp_at_zero
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CftKind::Zero)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, CftKind::Identity)
    }

    /// Compact label, matching the CLI spelling (`zero`, `scale:0.6`, ...).
    pub fn describe(&self) -> String {
        let base = match &self.kind {
            CftKind::Zero => "zero".to_string(),
            CftKind::Identity => "identity".to_string(),
            CftKind::Scale(a) => format!("scale:{a}"),
            CftKind::Shift(d) if d.len() == 1 => format!("shift:{}", d[0]),
            CftKind::Shift(d) => format!(
                "shift:{}",
                d.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        };
        if self.clamp_at_zero {
            format!("{base}:clamp")
        } else {
            base
        }
    }

    /// Parses the CLI spelling: `zero`, `identity`, `scale:<a>`, `shift:<d>`,
    /// optionally suffixed with `:clamp`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut text = s.trim().to_ascii_lowercase();
        let clamp = text.ends_with(":clamp");
        if clamp {
            text.truncate(text.len() - ":clamp".len());
        }
        let cft = match text.split_once(':') {
            None => match text.as_str() {
                "zero" => Counterfactual::zero(),
                "identity" => Counterfactual::identity(),
                other => {
                    return Err(Error::InvalidParameters(format!(
                        "unknown counterfactual '{other}' (expected zero, identity, scale:<a>, shift:<d>)"
                    )))
                }
            },
            Some(("scale", v)) => {
                let a: f64 = v.parse().map_err(|_| {
                    Error::InvalidParameters(format!("bad scale factor '{v}'"))
                })?;
                Counterfactual::scale(a)
            }
            Some(("shift", v)) => {
                let parts: Result<Vec<f64>> = v
                    .split(',')
                    .map(|p| {
                        p.trim().parse().map_err(|_| {
                            Error::InvalidParameters(format!("bad shift offset '{p}'"))
                        })
                    })
                    .collect();
                Counterfactual::shift(parts?)
            }
            Some((kind, _)) => {
                return Err(Error::InvalidParameters(format!(
                    "unknown counterfactual kind '{kind}'"
                )))
            }
        };
        Ok(if clamp { cft.clamped() } else { cft })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if let CftKind::Shift(d) = &self.kind {
            if d.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: d.len(),
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    fn apply_unclamped(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            CftKind::Zero => vec![0.0; x.len()],
            CftKind::Identity => x.to_vec(),
            CftKind::Scale(a) => x.iter().map(|xi| a * xi).collect(),
            CftKind::Shift(d) => x.iter().zip(d).map(|(xi, di)| xi + di).collect(),
        }
    }

    /// g(x), flooring at zero when clamping is enabled.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = self.apply_unclamped(x);
        if self.clamp_at_zero {
            for gi in &mut g {
                if *gi < 0.0 {
                    *gi = 0.0;
                }
            }
        }
        Ok(g)
    }

    /// Slope and intercept (a, d) of the scalar transform g(x) = a x + d,
    /// ignoring clamping. Available only for k = 1 shifts and all other kinds.
    pub fn affine_scalar(&self) -> Option<(f64, f64)> {
        match &self.kind {
            CftKind::Zero => Some((0.0, 0.0)),
            CftKind::Identity => Some((1.0, 0.0)),
            CftKind::Scale(a) => Some((*a, 0.0)),
            CftKind::Shift(d) if d.len() == 1 => Some((1.0, d[0])),
            CftKind::Shift(_) => None,
        }
    }

    /// Jacobian and per-component Hessians of g at `x`.
    ///
    /// Errors with `NonDifferentiableAtPoint` when clamping is active at `x`,
    /// i.e. any component of the unclamped image is <= 0.
    pub fn derivs(&self, x: &[f64]) -> Result<CftDerivs> {
        self.check_dim(x)?;
        let k = x.len();
        if self.clamp_at_zero && self.apply_unclamped(x).iter().any(|&g| g <= 0.0) {
            return Err(Error::NonDifferentiableAtPoint);
        }
        let diag = match &self.kind {
            CftKind::Zero => 0.0,
            CftKind::Identity => 1.0,
            CftKind::Scale(a) => *a,
            CftKind::Shift(_) => 1.0,
        };
        Ok(CftDerivs {
            jacobian: Matrix::from_diag(&vec![diag; k]),
            hessians: vec![Matrix::zeros(k, k); k],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model(beta: f64) -> RelativeRiskModel {
        RelativeRiskModel::scalar(RiskForm::Exponential, beta, 0.0).unwrap()
    }

    #[test]
    fn exponential_value_matches_published_rr() {
        let m = exp_model(1.27f64.ln());
        assert!((m.value(&[1.0]).unwrap() - 1.27).abs() < 1e-12);
        assert_eq!(m.value(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn linear_value_and_domain() {
        let m = RelativeRiskModel::scalar(RiskForm::Linear, 0.5, 0.0).unwrap();
        assert_eq!(m.value(&[2.0]).unwrap(), 2.0);
        assert_eq!(m.value(&[0.0]).unwrap(), 1.0);
        assert!(matches!(
            m.value(&[-3.0]),
            Err(Error::NonPositiveRisk { .. })
        ));
    }

    #[test]
    fn gradients() {
        let m = exp_model(0.0);
        assert_eq!(m.grad_beta(&[3.0]).unwrap(), vec![3.0]);

        let m = RelativeRiskModel::new(
            RiskForm::Linear,
            vec![0.2, 0.2],
            Matrix::zeros(2, 2),
        )
        .unwrap();
        assert_eq!(m.grad_beta(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let m = exp_model(2.0f64.ln());
        assert!((m.grad_beta(&[1.0]).unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hessians() {
        let m = RelativeRiskModel::scalar(RiskForm::Linear, 0.4, 0.0).unwrap();
        assert_eq!(m.hess_x(&[5.0]).unwrap().get(0, 0), 0.0);

        let beta = 1.27f64.ln();
        let m = exp_model(beta);
        let expected = beta * beta * (beta * 1.48f64).exp();
        assert!((m.hess_x(&[1.48]).unwrap().get(0, 0) - expected).abs() < 1e-12);

        let m = exp_model(0.0);
        assert_eq!(m.hess_x(&[1.0]).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn dimension_checks() {
        let m = exp_model(0.1);
        assert!(matches!(
            m.value(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(RelativeRiskModel::new(
            RiskForm::Exponential,
            vec![0.1, 0.2],
            Matrix::scalar(1.0)
        )
        .is_err());
    }

    #[test]
    fn covariance_validation() {
        let bad = Matrix::from_rows(&[vec![1.0, 0.9], vec![0.2, 1.0]]).unwrap();
        assert!(RelativeRiskModel::new(RiskForm::Exponential, vec![0.1, 0.2], bad).is_err());
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(
            RelativeRiskModel::new(RiskForm::Exponential, vec![0.1, 0.2], indefinite).is_err()
        );
    }

    #[test]
    fn rr_ci_conversion_recovers_reported_se() {
        let m = RelativeRiskModel::from_rr_ci(1.27, (1.16, 1.38), 0.95).unwrap();
        assert!((m.beta()[0] - 1.27f64.ln()).abs() < 1e-12);
        let se = m.beta_cov().get(0, 0).sqrt();
        assert!((se - 0.0443).abs() < 5e-5, "se = {se}");
    }

    #[test]
    fn counterfactual_apply() {
        let x = [2.0];
        assert_eq!(Counterfactual::scale(0.6).apply(&x).unwrap(), vec![1.2]);
        assert_eq!(Counterfactual::identity().apply(&[5.0]).unwrap(), vec![5.0]);
        assert_eq!(Counterfactual::zero().apply(&x).unwrap(), vec![0.0]);
        let clamped = Counterfactual::shift_scalar(-2.0).clamped();
        assert_eq!(clamped.apply(&[1.0]).unwrap(), vec![0.0]);
        assert_eq!(clamped.apply(&[3.5]).unwrap(), vec![1.5]);
    }

    #[test]
    fn counterfactual_derivs() {
        let d = Counterfactual::scale(0.6).derivs(&[2.0]).unwrap();
        assert_eq!(d.jacobian.get(0, 0), 0.6);
        assert_eq!(d.hessians[0].get(0, 0), 0.0);

        let d = Counterfactual::shift_scalar(-2.0).derivs(&[5.0]).unwrap();
        assert_eq!(d.jacobian.get(0, 0), 1.0);

        let d = Counterfactual::zero().derivs(&[1.0]).unwrap();
        assert_eq!(d.jacobian.get(0, 0), 0.0);

        let clamped = Counterfactual::shift_scalar(-2.0).clamped();
        assert!(matches!(
            clamped.derivs(&[1.0]),
            Err(Error::NonDifferentiableAtPoint)
        ));
        assert!(clamped.derivs(&[5.0]).is_ok());
    }

    #[test]
    fn parse_round_trips_describe() {
        for text in ["zero", "identity", "scale:0.6", "shift:-2", "scale:0.5:clamp"] {
            let cft = Counterfactual::parse(text).unwrap();
            assert_eq!(cft.describe(), text);
        }
        assert!(Counterfactual::parse("wat").is_err());
        assert!(Counterfactual::parse("scale:x").is_err());
        let multi = Counterfactual::parse("shift:-1,0.5").unwrap();
        assert_eq!(multi.apply(&[2.0, 2.0]).unwrap(), vec![1.0, 2.5]);
    }
}
