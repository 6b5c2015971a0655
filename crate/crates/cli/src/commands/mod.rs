//! Subcommand implementations.

pub mod balance;
pub mod estimate;
pub mod psych_cmd;
pub mod sim_cmd;
pub mod usage_cmd;

use crate::config::PipelineConfig;
use anyhow::{anyhow, Context};
use cohortkit::data::{load_dataset, select_sample, Dataset, Questionnaire, SampleSpec};
use std::path::Path;

/// Load the dataset referenced by the config.
pub fn load_configured_dataset(config: &PipelineConfig, config_dir: &Path) -> anyhow::Result<Dataset> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'dataset' is required for this subcommand"))?;
    let schema = config
        .schema
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'schema' is required for this subcommand"))?;
    let resolved = resolve_path(config_dir, path);
    load_dataset(&resolved, schema).with_context(|| format!("loading {}", resolved.display()))
}

/// Paths in the config resolve relative to the config file's directory.
pub fn resolve_path(config_dir: &Path, path: &Path) -> std::path::PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config_dir.join(path)
    }
}

pub fn find_sample<'a>(config: &'a PipelineConfig, name: &str) -> anyhow::Result<&'a SampleSpec> {
    config
        .samples
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| anyhow!("config field 'samples': no sample named '{name}'"))
}

pub fn select_named_sample(
    ds: &Dataset,
    config: &PipelineConfig,
    name: &str,
) -> anyhow::Result<(Dataset, cohortkit::data::SampleCounts)> {
    let spec = find_sample(config, name)?;
    Ok(select_sample(ds, spec)?)
}

/// Covariate list for estimation: schema covariates plus all items of
/// first-questionnaire scales.
pub fn estimation_covariates(ds: &Dataset) -> Vec<String> {
    let mut covariates: Vec<String> =
        ds.covariates().iter().map(|c| c.name().to_string()).collect();
    for scale in ds.scales() {
        if scale.questionnaire == Questionnaire::First {
            covariates.extend(scale.items.iter().cloned());
        }
    }
    covariates
}

/// Resolve an outcome spec: a plain column, or `mean:<scale>` computed over
/// the (already selected) sample.
pub fn resolve_outcome(ds: &Dataset, outcome: &str) -> anyhow::Result<Vec<f64>> {
    if let Some(scale_name) = outcome.strip_prefix("mean:") {
        let scale = ds.scale(scale_name)?;
        let mut values = Vec::with_capacity(ds.n());
        for row in 0..ds.n() {
            let mut total = 0.0;
            for item in &scale.items {
                let v = ds
                    .item(item)
                    .and_then(|col| col[row])
                    .ok_or_else(|| {
                        anyhow!(
                            "scale '{scale_name}' item '{item}' missing at row {row}; \
                             require 'mean:{scale_name}' in the sample definition"
                        )
                    })?;
                total += v as f64;
            }
            values.push(total / scale.items.len() as f64);
        }
        Ok(values)
    } else {
        Ok(ds.outcome_complete(outcome)?)
    }
}
