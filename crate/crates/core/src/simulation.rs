//! Monte Carlo evaluation of the estimators: coverage/bias scenarios, the
//! distributional-assumption bias grid, and the truncation-sensitivity curve.

use crate::distributions::{fit_moments, Family, FamilyKind, FittedDistribution};
use crate::error::{Error, Result};
use crate::estimators::{
    approximate_estimate, empirical_estimate, standard_estimate, true_paf_oracle, ApproxMode,
    EstimateResult, ExposureSample, SummaryStats,
};
use crate::numerics::{integrate_gk, normal_cdf, normal_pdf, normal_quantile};
use crate::rr_models::{Counterfactual, RelativeRiskModel, RiskForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Built-in scenario defaults: coefficient ln(1.27) with variance rule
/// sigma^2(n) = 0.0443^2 * 10000 / n, exposures truncated at 12.
pub const DEFAULT_BETA0: f64 = 0.23901690096142317; // ln(1.27)
pub const DEFAULT_UPPER_BOUND: f64 = 12.0;

/// How scenario exposures are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ExposureModel {
    /// Inverse-CDF draws from a fitted (truncated, renormalized) distribution.
    Parametric(FittedDistribution),
    /// Absolute value of a normal draw, rejected above `upper`. This is the
    /// nonnegative-exposure reading of a normal fit whose density folds the
    /// negative tail onto the positive axis.
    FoldedNormal {
        mean: f64,
        sd: f64,
        upper: Option<f64>,
    },
}

impl ExposureModel {
    pub fn describe(&self) -> String {
        match self {
            ExposureModel::Parametric(d) => format!("{:?}", d.family()),
            ExposureModel::FoldedNormal { mean, sd, upper } => {
                format!("FoldedNormal {{ mean: {mean}, sd: {sd}, upper: {upper:?} }}")
            }
        }
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ExposureModel::Parametric(d) => d.sample_one(rng),
            ExposureModel::FoldedNormal { mean, sd, upper } => loop {
                let u: f64 = rng.random();
                let x = (mean
                    + sd * normal_quantile(u.clamp(1e-16, 1.0 - 1e-16))
                        .expect("u clamped into (0, 1)"))
                .abs();
                if upper.is_none_or(|m| x <= m) {
                    return x;
                }
            },
        }
    }

    /// E[RR(X)] of the continuous part, by quadrature.
    fn expected_rr(&self, model: &RelativeRiskModel) -> Result<f64> {
        let beta = model.beta()[0];
        let rr = move |x: f64| match model.form() {
            RiskForm::Exponential => (beta * x).exp(),
            RiskForm::Linear => 1.0 + beta * x,
        };
        match self {
            ExposureModel::Parametric(d) => {
                match crate::distributions::expected_rr(d, model, None)? {
                    crate::distributions::ExpectedRr::Finite(e) => Ok(e),
                    crate::distributions::ExpectedRr::Divergent => Err(Error::DomainError(
                        "scenario exposure has divergent expected relative risk".into(),
                    )),
                }
            }
            ExposureModel::FoldedNormal { mean, sd, upper } => {
                let (m, s) = (*mean, *sd);
                let pdf = move |x: f64| {
                    (normal_pdf((x - m) / s) + normal_pdf((x + m) / s)) / s
                };
                let up = upper.unwrap_or(f64::INFINITY);
                let mass = if up.is_infinite() {
                    1.0
                } else {
                    normal_cdf((up - m) / s) - normal_cdf((-up - m) / s)
                };
                let num = integrate_gk(|x| rr(x) * pdf(x), 0.0, up, 1e-10, 1e-8)?;
                Ok(num.value / mass)
            }
        }
    }
}

/// One simulation configuration. Replication b draws its own RNG stream from
/// (seed, b), so results do not depend on execution order or thread count.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub exposure: ExposureModel,
    /// Probability of a zero exposure.
    pub p0: f64,
    /// Individuals per replication.
    pub n: usize,
    /// Number of replications.
    pub reps: usize,
    /// Center of the coefficient draw.
    pub beta0: f64,
    /// Variance of the coefficient draw, also fed to the estimators.
    pub beta_var: f64,
    pub level: f64,
    pub seed: u64,
    pub cft: Counterfactual,
}

impl Scenario {
    /// The built-in coefficient variance rule sigma^2(n).
    pub fn beta_variance_rule(n: usize) -> f64 {
        0.0443 * 0.0443 * 10_000.0 / n as f64
    }

    /// Scenario with the built-in calibrated exposure fits: lognormal
    /// (0.05, 0.98), Weibull (1.20, 1.66), or folded normal (1.56, 1.37),
    /// each bounded at 12.
    pub fn calibrated(
        family: FamilyKind,
        p0: f64,
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Result<Scenario> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidParameters(format!(
                "p0 must be in [0, 1], got {p0}"
            )));
        }
        if n < 2 || reps < 1 {
            return Err(Error::InvalidParameters(
                "need n >= 2 and at least one replication".into(),
            ));
        }
        let exposure = match family {
            FamilyKind::Lognormal => ExposureModel::Parametric(
                FittedDistribution::new(Family::Lognormal {
                    log_mean: 0.05,
                    log_sd: 0.98,
                })?
                .truncated(Some(0.0), Some(DEFAULT_UPPER_BOUND), true)?,
            ),
            FamilyKind::Weibull => ExposureModel::Parametric(
                FittedDistribution::new(Family::Weibull {
                    shape: 1.20,
                    scale: 1.66,
                })?
                .truncated(Some(0.0), Some(DEFAULT_UPPER_BOUND), true)?,
            ),
            FamilyKind::Normal => ExposureModel::FoldedNormal {
                mean: 1.56,
                sd: 1.37,
                upper: Some(DEFAULT_UPPER_BOUND),
            },
            FamilyKind::Gamma => ExposureModel::Parametric(
                FittedDistribution::new(Family::Gamma {
                    shape: 1.41,
                    scale: 0.90,
                })?
                .truncated(Some(0.0), Some(DEFAULT_UPPER_BOUND), true)?,
            ),
        };
        Ok(Scenario {
            label: format!("{}-p0_{p0}-n{n}", family.name()),
            exposure,
            p0,
            n,
            reps,
            beta0: DEFAULT_BETA0,
            beta_var: Self::beta_variance_rule(n),
            level: 0.95,
            seed,
            cft: Counterfactual::zero(),
        })
    }

    /// Ground-truth PAF of the generating mixture at the central coefficient.
    pub fn true_paf(&self) -> Result<f64> {
        let model = RelativeRiskModel::scalar(RiskForm::Exponential, self.beta0, 0.0)?;
        let e_cont = self.exposure.expected_rr(&model)?;
        let e = self.p0 + (1.0 - self.p0) * e_cont;
        Ok(1.0 - 1.0 / e)
    }
}

/// Aggregates for one estimation method over the replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub mean_estimate: f64,
    /// Mean of (estimate - true) / true.
    pub mean_rel_bias: f64,
    pub mean_se: f64,
    /// Sample standard deviation of the point estimates.
    pub sd_of_estimates: f64,
    /// Share of replications whose interval covers the true PAF.
    pub coverage: f64,
    /// Replications that returned an estimator error.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub label: String,
    pub p0: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub true_paf: f64,
    pub empirical: MethodReport,
    pub approximate: MethodReport,
}

impl ScenarioReport {
    pub fn csv_header() -> &'static str {
        "label,p0,n,reps,seed,true_paf,\
         emp_mean,emp_rel_bias,emp_mean_se,emp_sd,emp_coverage,emp_failures,\
         apx_mean,apx_rel_bias,apx_mean_se,apx_sd,apx_coverage,apx_failures"
    }

    pub fn to_csv_row(&self) -> String {
        let m = |r: &MethodReport| {
            format!(
                "{},{},{},{},{},{}",
                r.mean_estimate,
                r.mean_rel_bias,
                r.mean_se,
                r.sd_of_estimates,
                r.coverage,
                r.failures
            )
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.label,
            self.p0,
            self.n,
            self.reps,
            self.seed,
            self.true_paf,
            m(&self.empirical),
            m(&self.approximate)
        )
    }
}

struct RepOutcome {
    empirical: Result<(f64, f64, f64, f64)>,
    approximate: Result<(f64, f64, f64, f64)>,
}

/// Runs every replication (in parallel) and aggregates. Bit-identical output
/// for a given scenario regardless of thread count: each replication uses its
/// own ChaCha stream and the reduction walks replications in order.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    let true_paf = scenario.true_paf()?;
    let outcomes: Vec<RepOutcome> = (0..scenario.reps)
        .into_par_iter()
        .map(|b| run_replication(scenario, b as u64))
        .collect();

    let summarize = |pick: &dyn Fn(&RepOutcome) -> &Result<(f64, f64, f64, f64)>| {
        let mut points = Vec::with_capacity(outcomes.len());
        let mut se_sum = 0.0;
        let mut covered = 0usize;
        let mut failures = 0usize;
        for o in &outcomes {
            match pick(o) {
                Ok((point, se, lo, hi)) => {
                    points.push(*point);
                    se_sum += se;
                    if *lo <= true_paf && true_paf <= *hi {
                        covered += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
        let count = points.len().max(1) as f64;
        let mean = points.iter().sum::<f64>() / count;
        let sd = if points.len() > 1 {
            (points.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
                / (points.len() as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        MethodReport {
            mean_estimate: mean,
            mean_rel_bias: if true_paf != 0.0 {
                (mean - true_paf) / true_paf
            } else {
                mean
            },
            mean_se: se_sum / count,
            sd_of_estimates: sd,
            coverage: covered as f64 / count,
            failures,
        }
    };

    Ok(ScenarioReport {
        label: scenario.label.clone(),
        p0: scenario.p0,
        n: scenario.n,
        reps: scenario.reps,
        seed: scenario.seed,
        true_paf,
        empirical: summarize(&|o: &RepOutcome| &o.empirical),
        approximate: summarize(&|o: &RepOutcome| &o.approximate),
    })
}

fn run_replication(scenario: &Scenario, b: u64) -> RepOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    rng.set_stream(b.wrapping_add(1));

    let mut xs = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        if scenario.p0 > 0.0 {
            let u: f64 = rng.random();
            if u < scenario.p0 {
                xs.push(0.0);
                continue;
            }
        }
        xs.push(scenario.exposure.sample_one(&mut rng));
    }
    let u: f64 = rng.random();
    let beta_b = scenario.beta0
        + scenario.beta_var.sqrt()
            * normal_quantile(u.clamp(1e-16, 1.0 - 1e-16)).expect("u clamped into (0, 1)");

    let run = || -> Result<(RepOutcome,)> {
        let model =
            RelativeRiskModel::scalar(RiskForm::Exponential, beta_b, scenario.beta_var.sqrt())?;
        let sample = ExposureSample::from_column(xs.clone())?;
        let empirical = empirical_estimate(&sample, &model, &scenario.cft, scenario.level)
            .map(extract_interval);
        let approximate = SummaryStats::from_sample(&sample).and_then(|stats| {
            approximate_estimate(&stats, &model, &scenario.cft, scenario.level, ApproxMode::PaperSd)
                .map(extract_interval)
        });
        Ok((RepOutcome {
            empirical,
            approximate,
        },))
    };
    match run() {
        Ok((o,)) => o,
        Err(e) => RepOutcome {
            empirical: Err(e.clone()),
            approximate: Err(e),
        },
    }
}

fn extract_interval(r: EstimateResult) -> (f64, f64, f64, f64) {
    let se = r.se.unwrap_or(f64::NAN);
    let (lo, hi) = r.ci.unwrap_or((f64::NAN, f64::NAN));
    (r.point, se, lo, hi)
}

/// Truncation convention for the assumed-normal column of the bias grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationConvention {
    /// Divide the truncated normal density by its window mass (default).
    Renormalize,
    /// Integrate against the deficient density, discarding the negative tail.
    DiscardMass,
}

impl TruncationConvention {
    pub fn name(&self) -> &'static str {
        match self {
            TruncationConvention::Renormalize => "renormalize",
            TruncationConvention::DiscardMass => "discard",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiasCell {
    pub true_label: String,
    pub true_paf: f64,
    pub assumed: FamilyKind,
    pub assumed_paf: f64,
    /// 100 * (assumed - true) / true.
    pub rel_bias_pct: f64,
}

#[derive(Debug, Clone)]
pub struct BiasGrid {
    pub convention: TruncationConvention,
    pub cells: Vec<BiasCell>,
}

impl BiasGrid {
    pub fn cell(&self, true_label: &str, assumed: FamilyKind) -> Option<&BiasCell> {
        self.cells
            .iter()
            .find(|c| c.true_label == true_label && c.assumed == assumed)
    }
}

/// The default grid: the three illustrative true exposure distributions, with
/// the nonnegative normal truncated at zero and renormalized.
pub fn default_bias_grid_truths() -> Result<Vec<(String, FittedDistribution)>> {
    Ok(vec![
        (
            "gamma".into(),
            FittedDistribution::new(Family::Gamma {
                shape: 1.15,
                scale: 1.29,
            })?,
        ),
        (
            "normal".into(),
            FittedDistribution::new(Family::Normal {
                mean: 1.48,
                sd: 1.38,
            })?
            .truncated(Some(0.0), None, true)?,
        ),
        (
            "weibull".into(),
            FittedDistribution::new(Family::Weibull {
                shape: 1.08,
                scale: 1.53,
            })?,
        ),
    ])
}

/// Relative bias of the standard method when `assumed` families are
/// moment-fit to each true distribution's nominal mean and variance.
pub fn bias_grid(
    truths: &[(String, FittedDistribution)],
    assumed: &[FamilyKind],
    model: &RelativeRiskModel,
    convention: TruncationConvention,
) -> Result<BiasGrid> {
    let cft = Counterfactual::zero();
    let mut cells = Vec::new();
    for (label, truth) in truths {
        let true_paf = true_paf_oracle(truth, model)?;
        let (mean, var) = truth.family().mean_var();
        for &kind in assumed {
            let mut fitted = fit_moments(kind, mean, var)?;
            if kind == FamilyKind::Normal {
                fitted = fitted.truncated(
                    Some(0.0),
                    None,
                    convention == TruncationConvention::Renormalize,
                )?;
            }
            let assumed_paf = standard_estimate(&fitted, model, &cft)?.point;
            cells.push(BiasCell {
                true_label: label.clone(),
                true_paf,
                assumed: kind,
                assumed_paf,
                rel_bias_pct: 100.0 * (assumed_paf - true_paf) / true_paf,
            });
        }
    }
    Ok(BiasGrid { convention, cells })
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub m: f64,
    pub cft: String,
    pub value: f64,
}

/// PAF/PIF of the distribution truncated to [0, M], for each M in the grid
/// and each counterfactual. Nondecreasing in M for a positive exponential
/// coefficient under full elimination.
pub fn truncation_curve(
    dist: &FittedDistribution,
    model: &RelativeRiskModel,
    cfts: &[Counterfactual],
    m_grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(cfts.len() * m_grid.len());
    for &m in m_grid {
        if !(m > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "truncation bound must be positive, got {m}"
            )));
        }
        let bounded = dist.clone().truncated(Some(0.0), Some(m), true)?;
        for cft in cfts {
            let est = standard_estimate(&bounded, model, cft)?;
            out.push(CurvePoint {
                m,
                cft: cft.describe(),
                value: est.point,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_variance_rule_matches_reported_se() {
        assert!((Scenario::beta_variance_rule(10_000).sqrt() - 0.0443).abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_runs() {
        let s = Scenario::calibrated(FamilyKind::Lognormal, 0.05, 200, 20, 99).unwrap();
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fully_unexposed_scenario_degenerates_to_zero() {
        let s = Scenario::calibrated(FamilyKind::Weibull, 1.0, 100, 10, 3).unwrap();
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.true_paf, 0.0);
        assert_eq!(r.empirical.mean_estimate, 0.0);
        assert_eq!(r.empirical.failures, 0);
        assert_eq!(r.empirical.coverage, 1.0);
    }

    #[test]
    fn curve_monotone_and_anchored() {
        let d = FittedDistribution::new(Family::Lognormal {
            log_mean: 0.05,
            log_sd: 0.98,
        })
        .unwrap();
        let model = RelativeRiskModel::scalar(RiskForm::Exponential, 1.27f64.ln(), 0.0).unwrap();
        let grid: Vec<f64> = (1..=30).map(|i| 2.0 * i as f64).collect();
        let curve = truncation_curve(&d, &model, &[Counterfactual::zero()], &grid).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].value >= w[0].value - 1e-10);
        }
        let at_12 = curve.iter().find(|p| (p.m - 12.0).abs() < 1e-9).unwrap();
        assert!((at_12.value - 0.3912).abs() < 1e-3);
    }

    #[test]
    fn grid_diagonal_is_unbiased() {
        let model = RelativeRiskModel::scalar(RiskForm::Exponential, 1.27f64.ln(), 0.0).unwrap();
        let truths = default_bias_grid_truths().unwrap();
        let grid = bias_grid(
            &truths,
            &[FamilyKind::Gamma, FamilyKind::Normal, FamilyKind::Weibull],
            &model,
            TruncationConvention::Renormalize,
        )
        .unwrap();
        for label in ["gamma", "normal", "weibull"] {
            let kind = FamilyKind::parse(label).unwrap();
            let cell = grid.cell(label, kind).unwrap();
            assert!(
                cell.rel_bias_pct.abs() < 0.5,
                "{label} diagonal bias {}",
                cell.rel_bias_pct
            );
        }
    }
}
