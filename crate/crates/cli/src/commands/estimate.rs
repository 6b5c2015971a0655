//! `estimate`: regression-adjustment baselines and both DML models across
//! the configured outcome runs, one table row per (outcome, estimator).

use super::{estimation_covariates, load_configured_dataset, resolve_outcome, select_named_sample};
use crate::config::{EstimatorName, PipelineConfig};
use crate::output::{fmt, OutputSink, Table};
use anyhow::anyhow;
use cohortkit::data::{build_design_matrix, Questionnaire};
use cohortkit::dml::{estimate_ate_from_parts, DmlConfig, DmlModel, OutcomeKind};
use cohortkit::inference::{fit_ols_robust, HcVariant, OlsOptions, OlsVariant};
use cohortkit::seed::derive_seed;
use cohortkit::stats::{normal_p_two_sided, significance_stars};
use std::path::Path;

fn hc_variant(name: &str) -> anyhow::Result<HcVariant> {
    match name {
        "hc0" => Ok(HcVariant::Hc0),
        "hc1" => Ok(HcVariant::Hc1),
        "hc3" => Ok(HcVariant::Hc3),
        other => Err(anyhow!("config field 'estimate.ols.hc': unknown variant '{other}'")),
    }
}

pub fn run(
    config: &PipelineConfig,
    config_dir: &Path,
    seed: u64,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config
        .estimate
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'estimate' is required"))?;
    let dataset = load_configured_dataset(config, config_dir)?;

    let mut table = Table::new(&[
        "outcome",
        "sample",
        "n_control",
        "n_treated",
        "estimator",
        "theta",
        "se",
        "p_value",
        "stars",
    ]);

    for (run_index, run) in section.runs.iter().enumerate() {
        let (sample, counts) = select_named_sample(&dataset, config, &run.sample)?;
        let y = resolve_outcome(&sample, &run.outcome)?;
        let covariates = estimation_covariates(&sample);
        let design = build_design_matrix(&sample, &covariates, false)?;
        let first_scales: Vec<_> = sample
            .scales()
            .iter()
            .filter(|s| s.questionnaire == Questionnaire::First)
            .cloned()
            .collect();

        for estimator in &section.estimators {
            let (theta, se, p) = match estimator {
                EstimatorName::Ols1 | EstimatorName::Ols2 | EstimatorName::Ols3 => {
                    let variant = match estimator {
                        EstimatorName::Ols1 => OlsVariant::Full,
                        EstimatorName::Ols2 => OlsVariant::ScaleMeans,
                        _ => OlsVariant::ScalePcs,
                    };
                    let options = OlsOptions {
                        variant,
                        hc: hc_variant(&section.ols.hc)?,
                        reduce_exclude: section.ols.reduce_exclude.clone(),
                    };
                    let result = fit_ols_robust(
                        &design,
                        sample.treatment(),
                        &y,
                        &first_scales,
                        &options,
                    )?;
                    (result.theta, result.theta_se, result.theta_p)
                }
                EstimatorName::DmlInteractive | EstimatorName::DmlPartiallyLinear => {
                    let model = match estimator {
                        EstimatorName::DmlInteractive => DmlModel::Interactive,
                        _ => DmlModel::PartiallyLinear,
                    };
                    let cfg = DmlConfig {
                        folds: section.dml.folds,
                        repetitions: section.dml.repetitions,
                        clip: section.dml.clip,
                        seed: derive_seed(seed, 0xe57, run_index as u64),
                        cv_folds: section.dml.cv_folds,
                        lambda_grid: section.dml.lambda_grid.clone(),
                        outcome_kind: OutcomeKind::Auto,
                    };
                    let est = estimate_ate_from_parts(
                        design.matrix(),
                        sample.treatment(),
                        &y,
                        model,
                        &cfg,
                    )?;
                    let p = normal_p_two_sided(est.theta / est.se.max(1e-300));
                    (est.theta, est.se, p)
                }
            };
            table.push(vec![
                run.outcome.clone(),
                run.sample.clone(),
                counts.control.to_string(),
                counts.treated.to_string(),
                estimator.label().to_string(),
                fmt(theta),
                fmt(se),
                fmt(p),
                significance_stars(p).to_string(),
            ]);
        }
    }

    sink.write_table("estimates", &table)?;
    Ok(())
}
