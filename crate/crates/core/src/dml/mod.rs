//! Double/debiased machine learning for average treatment effects.
//!
//! Two estimators share the cross-fitting machinery:
//!
//! - the interactive (doubly robust AIPW) estimator, which regresses the
//!   outcome separately per arm and combines the two regressions with
//!   inverse-propensity-weighted residuals, and
//! - the partially linear estimator, which assumes a homogeneous effect and
//!   regresses outcome residuals on treatment residuals.
//!
//! Nuisance functions are ridge regressions (logistic ridge for the
//! propensity and binary outcomes) with penalties tuned by inner
//! cross-validation. Estimation runs over independently seeded repetitions
//! of the fold split; repetition estimates are aggregated by the median rule
//! with dispersion-inflated standard errors.

mod crossfit;
pub mod score;

pub use score::{
    aipw_estimate, partially_linear_estimate, InteractiveNuisances, PartiallyLinearNuisances,
    ScoredEstimate,
};

use crate::data::{build_design_matrix, Dataset};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::stats::median;
use crossfit::{fit_repetition, resolve_outcome_kind, RepetitionInputs};
use nalgebra::DMatrix;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmlModel {
    Interactive,
    PartiallyLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Auto,
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct DmlConfig {
    pub folds: usize,
    pub repetitions: usize,
    /// Propensity clip ε enforcing common support numerically.
    pub clip: f64,
    pub seed: u64,
    /// Inner cross-validation folds for penalty tuning.
    pub cv_folds: usize,
    /// Explicit penalty grid; `None` uses the data-scaled default grid.
    pub lambda_grid: Option<Vec<f64>>,
    pub outcome_kind: OutcomeKind,
}

impl Default for DmlConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            repetitions: 100,
            clip: 0.01,
            seed: 0,
            cv_folds: 10,
            lambda_grid: None,
            outcome_kind: OutcomeKind::Auto,
        }
    }
}

impl DmlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config("cross-fitting needs at least 2 folds"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("need at least 1 repetition"));
        }
        if !(self.clip > 0.0 && self.clip < 0.5) {
            return Err(Error::config("clip must lie in (0, 0.5)"));
        }
        if self.cv_folds < 2 {
            return Err(Error::config("penalty tuning needs at least 2 folds"));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                return Err(Error::config("empty penalty grid"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RepetitionEstimate {
    pub theta: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct DmlDiagnostics {
    /// Largest share of clipped propensities across repetitions.
    pub clip_fraction: f64,
    /// More than 5% of propensities needed clipping in some repetition.
    pub overlap_warning: bool,
    /// Largest |mean orthogonal score| at the repetition estimates.
    pub max_abs_mean_score: f64,
    pub outcome_lambdas: Vec<f64>,
    pub propensity_lambdas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AteEstimate {
    pub theta: f64,
    pub se: f64,
    /// θ̂ ± 1.96·SE.
    pub ci: (f64, f64),
    pub repetitions: Vec<RepetitionEstimate>,
    pub diagnostics: DmlDiagnostics,
}

/// Median aggregation over repetitions:
/// `θ̂ = median_r θ̂_r`, `SE = median_r √(SE_r² + (θ̂_r − θ̂)²)`.
pub fn aggregate_repetitions(estimates: &[RepetitionEstimate]) -> Result<(f64, f64)> {
    if estimates.is_empty() {
        return Err(Error::validation("no repetition estimates to aggregate"));
    }
    let thetas: Vec<f64> = estimates.iter().map(|e| e.theta).collect();
    let theta = median(&thetas);
    let inflated: Vec<f64> = estimates
        .iter()
        .map(|e| (e.se * e.se + (e.theta - theta).powi(2)).sqrt())
        .collect();
    Ok((theta, median(&inflated)))
}

fn estimate_from_matrix(
    x: &DMatrix<f64>,
    d: &[u8],
    y: &[f64],
    model: DmlModel,
    cfg: &DmlConfig,
) -> Result<AteEstimate> {
    cfg.validate()?;
    let n = y.len();
    if x.nrows() != n || d.len() != n {
        return Err(Error::validation("design/treatment/outcome length mismatch"));
    }
    let treated = d.iter().filter(|&&v| v == 1).count();
    if treated == 0 || treated == n {
        return Err(Error::validation("treatment must vary"));
    }
    let binary_outcome = resolve_outcome_kind(cfg.outcome_kind, y);
    let inputs = RepetitionInputs { x, d, y, binary_outcome };
    let interactive = model == DmlModel::Interactive;

    struct RepOutput {
        estimate: RepetitionEstimate,
        mean_score: f64,
        clip_fraction: f64,
        outcome_lambda: f64,
        propensity_lambda: f64,
    }

    let outputs: Vec<Result<RepOutput>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(cfg.seed, stream::DML_REPETITION, rep as u64);
            let nuis = fit_repetition(&inputs, cfg, rep_seed, interactive)?;
            let scored = if interactive {
                aipw_estimate(y, d, nuis.interactive.as_ref().expect("interactive nuisances"))?
            } else {
                partially_linear_estimate(
                    y,
                    d,
                    nuis.partially_linear.as_ref().expect("partially linear nuisances"),
                )?
            };
            Ok(RepOutput {
                estimate: RepetitionEstimate { theta: scored.theta, se: scored.se },
                mean_score: scored.mean_score,
                clip_fraction: nuis.clip.clipped as f64 / nuis.clip.total as f64,
                outcome_lambda: nuis.outcome_lambda,
                propensity_lambda: nuis.propensity_lambda,
            })
        })
        .collect();

    let mut estimates = Vec::with_capacity(cfg.repetitions);
    let mut max_score: f64 = 0.0;
    let mut max_clip: f64 = 0.0;
    let mut outcome_lambdas = Vec::with_capacity(cfg.repetitions);
    let mut propensity_lambdas = Vec::with_capacity(cfg.repetitions);
    for output in outputs {
        let o = output?;
        estimates.push(o.estimate);
        max_score = max_score.max(o.mean_score.abs());
        max_clip = max_clip.max(o.clip_fraction);
        outcome_lambdas.push(o.outcome_lambda);
        propensity_lambdas.push(o.propensity_lambda);
    }

    let (theta, se) = aggregate_repetitions(&estimates)?;
    Ok(AteEstimate {
        theta,
        se,
        ci: (theta - 1.96 * se, theta + 1.96 * se),
        repetitions: estimates,
        diagnostics: DmlDiagnostics {
            clip_fraction: max_clip,
            overlap_warning: max_clip > 0.05,
            max_abs_mean_score: max_score,
            outcome_lambdas,
            propensity_lambdas,
        },
    })
}

/// Doubly robust AIPW estimate of the ATE from a dataset.
pub fn estimate_ate_interactive(
    ds: &Dataset,
    covariates: &[String],
    outcome: &str,
    cfg: &DmlConfig,
) -> Result<AteEstimate> {
    let design = build_design_matrix(ds, covariates, false)?;
    let y = ds.outcome_complete(outcome)?;
    estimate_from_matrix(design.matrix(), ds.treatment(), &y, DmlModel::Interactive, cfg)
}

/// Partially linear (homogeneous-effect) estimate of the ATE from a dataset.
pub fn estimate_ate_partially_linear(
    ds: &Dataset,
    covariates: &[String],
    outcome: &str,
    cfg: &DmlConfig,
) -> Result<AteEstimate> {
    let design = build_design_matrix(ds, covariates, false)?;
    let y = ds.outcome_complete(outcome)?;
    estimate_from_matrix(design.matrix(), ds.treatment(), &y, DmlModel::PartiallyLinear, cfg)
}

/// Estimate directly from numeric parts (simulation benchmarks bypass the
/// dataset layer).
pub fn estimate_ate_from_parts(
    x: &DMatrix<f64>,
    d: &[u8],
    y: &[f64],
    model: DmlModel,
    cfg: &DmlConfig,
) -> Result<AteEstimate> {
    estimate_from_matrix(x, d, y, model, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn aggregation_single_repetition_passes_through() {
        let reps = [RepetitionEstimate { theta: 1.5, se: 0.2 }];
        let (theta, se) = aggregate_repetitions(&reps).unwrap();
        assert_abs_diff_eq!(theta, 1.5);
        assert_abs_diff_eq!(se, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn aggregation_identical_repetitions_is_identity() {
        let reps = vec![RepetitionEstimate { theta: 0.7, se: 0.1 }; 5];
        let (theta, se) = aggregate_repetitions(&reps).unwrap();
        assert_abs_diff_eq!(theta, 0.7);
        assert_abs_diff_eq!(se, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn aggregation_matches_direct_formula_evaluation() {
        // Repetitions (1, 0.1), (2, 0.1), (3, 0.1): the median θ̂ is 2 and the
        // inflated SEs are {√1.01, 0.1, √1.01}, whose median is √1.01.
        let reps = vec![
            RepetitionEstimate { theta: 1.0, se: 0.1 },
            RepetitionEstimate { theta: 2.0, se: 0.1 },
            RepetitionEstimate { theta: 3.0, se: 0.1 },
        ];
        let (theta, se) = aggregate_repetitions(&reps).unwrap();
        assert_abs_diff_eq!(theta, 2.0);
        assert_abs_diff_eq!(se, (1.01f64).sqrt(), epsilon = 1e-12);
    }

    fn confounded_problem(
        n: usize,
        tau: f64,
        seed: u64,
    ) -> (DMatrix<f64>, Vec<u8>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = 4;
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut d = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let index = 0.8 * x[(i, 0)] - 0.5 * x[(i, 1)];
            let pr = crate::learners::sigmoid(index);
            let di = u8::from(rng.gen::<f64>() < pr);
            let h = 1.0 * x[(i, 0)] + 0.5 * x[(i, 1)] - 0.7 * x[(i, 2)];
            let eps: f64 = rng.sample(StandardNormal);
            y.push(tau * di as f64 + h + eps);
            d.push(di);
        }
        (x, d, y)
    }

    #[test]
    fn interactive_recovers_tau_on_confounded_data() {
        let (x, d, y) = confounded_problem(1500, 0.5, 1);
        let cfg = DmlConfig { repetitions: 3, seed: 11, ..DmlConfig::default() };
        let est = estimate_ate_from_parts(&x, &d, &y, DmlModel::Interactive, &cfg).unwrap();
        assert!((est.theta - 0.5).abs() < 3.0 * est.se, "theta = {}", est.theta);
        assert!(est.diagnostics.max_abs_mean_score < 1e-8);
        assert_abs_diff_eq!(est.ci.0, est.theta - 1.96 * est.se, epsilon = 1e-12);
    }

    #[test]
    fn partially_linear_agrees_with_interactive_under_constant_effect() {
        let (x, d, y) = confounded_problem(1500, 0.5, 2);
        let cfg = DmlConfig { repetitions: 3, seed: 21, ..DmlConfig::default() };
        let a = estimate_ate_from_parts(&x, &d, &y, DmlModel::Interactive, &cfg).unwrap();
        let b = estimate_ate_from_parts(&x, &d, &y, DmlModel::PartiallyLinear, &cfg).unwrap();
        let joint_se = (a.se * a.se + b.se * b.se).sqrt();
        assert!(
            (a.theta - b.theta).abs() < 2.0 * joint_se,
            "interactive {} vs partially linear {}",
            a.theta,
            b.theta
        );
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (x, d, y) = confounded_problem(400, 0.5, 3);
        let cfg = DmlConfig { repetitions: 4, seed: 33, ..DmlConfig::default() };
        let a = estimate_ate_from_parts(&x, &d, &y, DmlModel::Interactive, &cfg).unwrap();
        let b = estimate_ate_from_parts(&x, &d, &y, DmlModel::Interactive, &cfg).unwrap();
        assert_eq!(a.theta.to_bits(), b.theta.to_bits());
        assert_eq!(a.se.to_bits(), b.se.to_bits());
        for (ra, rb) in a.repetitions.iter().zip(b.repetitions.iter()) {
            assert_eq!(ra.theta.to_bits(), rb.theta.to_bits());
        }
    }

    #[test]
    fn constant_treatment_errors() {
        let (x, _, y) = confounded_problem(100, 0.5, 4);
        let d = vec![1u8; 100];
        let cfg = DmlConfig { repetitions: 1, ..DmlConfig::default() };
        assert!(estimate_ate_from_parts(&x, &d, &y, DmlModel::PartiallyLinear, &cfg).is_err());
    }

    #[test]
    fn missing_outcomes_direct_to_sample_selection() {
        use crate::data::{CovariateColumn, Dataset};
        let ds = Dataset::from_columns(
            (0..6).map(|i| format!("s{i}")).collect(),
            vec![0, 1, 0, 1, 0, 1],
            vec![("y".into(), vec![Some(1.0), None, Some(0.5), Some(2.0), Some(1.5), Some(0.0)])],
            vec![CovariateColumn::Numeric {
                name: "w".into(),
                values: vec![0.1, -0.2, 0.3, 0.5, -0.1, 0.2],
            }],
            vec![],
            vec![],
        )
        .unwrap();
        let cfg = DmlConfig { repetitions: 1, ..DmlConfig::default() };
        let err = estimate_ate_interactive(&ds, &["w".into()], "y", &cfg).unwrap_err();
        assert!(err.to_string().contains("sample"), "{err}");
    }

    #[test]
    fn binary_outcome_effect_on_probability_scale() {
        let n = 1200;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut d = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        // Roughly +18 percentage points at these parameters.
        for i in 0..n {
            let pr = crate::learners::sigmoid(0.6 * x[(i, 0)]);
            let di = u8::from(rng.gen::<f64>() < pr);
            let p = crate::learners::sigmoid(0.8 * di as f64 + 0.5 * x[(i, 0)] - 0.4 * x[(i, 1)]);
            y.push(f64::from(rng.gen::<f64>() < p));
            d.push(di);
        }
        let cfg = DmlConfig { repetitions: 2, seed: 55, ..DmlConfig::default() };
        let est = estimate_ate_from_parts(&x, &d, &y, DmlModel::Interactive, &cfg).unwrap();
        assert!(est.theta > 0.05 && est.theta < 0.35, "theta = {}", est.theta);
    }
}
