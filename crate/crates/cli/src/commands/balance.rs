//! `balance`: cohort mean-comparison report over covariates, first-
//! questionnaire scale means, and outcomes, per configured sample.

use super::{load_configured_dataset, select_named_sample};
use crate::config::PipelineConfig;
use crate::output::{fmt, OutputSink, Table};
use anyhow::anyhow;
use cohortkit::data::{CovariateColumn, Dataset};
use cohortkit::inference::{chi_square_homogeneity, welch_mean_test};
use cohortkit::stats::mean;
use std::collections::BTreeMap;
use std::path::Path;

fn split_by_cohort(ds: &Dataset, values: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    let mut control = Vec::new();
    let mut treated = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            if ds.treatment()[i] == 1 {
                treated.push(*v);
            } else {
                control.push(*v);
            }
        }
    }
    (control, treated)
}

fn welch_row(
    table: &mut Table,
    sample: &str,
    section: &str,
    variable: &str,
    control: &[f64],
    treated: &[f64],
) {
    match welch_mean_test(control, treated) {
        Ok(test) => table.push(vec![
            sample.to_string(),
            section.to_string(),
            variable.to_string(),
            fmt(test.mean_a),
            fmt(test.mean_b),
            "welch_t".to_string(),
            fmt(test.t_statistic),
            fmt(test.p_value),
        ]),
        Err(_) => table.push(vec![
            sample.to_string(),
            section.to_string(),
            variable.to_string(),
            fmt(mean(control)),
            fmt(mean(treated)),
            "welch_t".to_string(),
            "NA".to_string(),
            "NA".to_string(),
        ]),
    }
}

pub fn run(
    config: &PipelineConfig,
    config_dir: &Path,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config
        .balance
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'balance' is required"))?;
    let dataset = load_configured_dataset(config, config_dir)?;

    let mut table = Table::new(&[
        "sample",
        "section",
        "variable",
        "mean_cohort0",
        "mean_cohort1",
        "test",
        "statistic",
        "p_value",
    ]);

    for sample_name in &section.samples {
        let (sample, _) = select_named_sample(&dataset, config, sample_name)?;

        for covariate in sample.covariates() {
            match covariate {
                CovariateColumn::Numeric { name, values } => {
                    let wrapped: Vec<Option<f64>> = values.iter().map(|&v| Some(v)).collect();
                    let (control, treated) = split_by_cohort(&sample, &wrapped);
                    welch_row(&mut table, sample_name, "covariate", name, &control, &treated);
                }
                CovariateColumn::Categorical { name, values, .. } => {
                    let mut levels: BTreeMap<&str, [u64; 2]> = BTreeMap::new();
                    for (i, v) in values.iter().enumerate() {
                        levels.entry(v.as_str()).or_default()
                            [sample.treatment()[i] as usize] += 1;
                    }
                    let counts: Vec<Vec<u64>> = (0..2)
                        .map(|arm| levels.values().map(|c| c[arm]).collect())
                        .collect();
                    match chi_square_homogeneity(&counts) {
                        Ok(test) => table.push(vec![
                            sample_name.clone(),
                            "covariate".to_string(),
                            name.clone(),
                            "NA".to_string(),
                            "NA".to_string(),
                            "chi_square".to_string(),
                            fmt(test.statistic),
                            fmt(test.p_value),
                        ]),
                        Err(_) => table.push(vec![
                            sample_name.clone(),
                            "covariate".to_string(),
                            name.clone(),
                            "NA".to_string(),
                            "NA".to_string(),
                            "chi_square".to_string(),
                            "NA".to_string(),
                            "NA".to_string(),
                        ]),
                    }
                }
            }
        }

        for scale in sample.scales() {
            // Scale mean over rows with the full item set present.
            let complete = sample.complete_rows_for_scale(scale);
            let mut values: Vec<Option<f64>> = vec![None; sample.n()];
            for &row in &complete {
                let total: f64 = scale
                    .items
                    .iter()
                    .map(|item| sample.item(item).unwrap()[row].unwrap() as f64)
                    .sum();
                values[row] = Some(total / scale.items.len() as f64);
            }
            let (control, treated) = split_by_cohort(&sample, &values);
            if control.len() >= 2 && treated.len() >= 2 {
                welch_row(
                    &mut table,
                    sample_name,
                    "scale_mean",
                    &format!("mean:{}", scale.name),
                    &control,
                    &treated,
                );
            }
        }

        for outcome in sample.outcome_names() {
            let values = sample.outcome(outcome)?;
            let (control, treated) = split_by_cohort(&sample, values);
            if control.len() >= 2 && treated.len() >= 2 {
                welch_row(&mut table, sample_name, "outcome", outcome, &control, &treated);
            }
        }
    }

    sink.write_table("balance", &table)?;
    Ok(())
}
