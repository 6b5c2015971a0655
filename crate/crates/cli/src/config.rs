//! Pipeline configuration: one JSON file drives every subcommand.

use cohortkit::data::{DatasetSchema, SampleSpec};
use cohortkit::sim::{BenchmarkEstimator, CohortSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    Ols1,
    Ols2,
    Ols3,
    DmlInteractive,
    DmlPartiallyLinear,
}

impl EstimatorName {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorName::Ols1 => "ols1",
            EstimatorName::Ols2 => "ols2",
            EstimatorName::Ols3 => "ols3",
            EstimatorName::DmlInteractive => "dml_interactive",
            EstimatorName::DmlPartiallyLinear => "dml_partially_linear",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DmlSection {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_clip")]
    pub clip: f64,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
}

fn default_folds() -> usize {
    5
}
fn default_repetitions() -> usize {
    100
}
fn default_clip() -> f64 {
    0.01
}
fn default_cv_folds() -> usize {
    10
}

impl Default for DmlSection {
    fn default() -> Self {
        Self {
            folds: default_folds(),
            repetitions: default_repetitions(),
            clip: default_clip(),
            cv_folds: default_cv_folds(),
            lambda_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsSection {
    /// hc0 | hc1 | hc3
    #[serde(default = "default_hc")]
    pub hc: String,
    /// Scales kept at raw item level in the reduced variants.
    #[serde(default)]
    pub reduce_exclude: Vec<String>,
}

fn default_hc() -> String {
    "hc1".to_string()
}

impl Default for OlsSection {
    fn default() -> Self {
        Self { hc: default_hc(), reduce_exclude: vec![] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRun {
    /// Outcome column, or `mean:<scale>` for a scale-mean outcome.
    pub outcome: String,
    pub sample: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateSection {
    pub runs: Vec<EstimateRun>,
    pub estimators: Vec<EstimatorName>,
    #[serde(default)]
    pub dml: DmlSection,
    #[serde(default)]
    pub ols: OlsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceSection {
    pub samples: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsageSection {
    pub video_events: PathBuf,
    pub video_catalog: PathBuf,
    /// ISO-8601 UTC exam timestamp.
    pub exam_time: String,
    pub quiz_attempts: PathBuf,
    pub quiz_catalog: PathBuf,
    pub clicker_records: PathBuf,
    pub clicker_catalog: PathBuf,
    pub exam_points: PathBuf,
    /// Explicit quartile boundaries; empirical quantiles when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartile_cutoffs: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateSection {
    #[serde(flatten)]
    pub spec: CohortSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkSection {
    pub spec: CohortSpec,
    pub estimators: Vec<BenchmarkEstimator>,
    pub replications: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemAnalysisSection {
    #[serde(default = "default_item_total_threshold")]
    pub item_total_threshold: f64,
    #[serde(default = "default_loading_threshold")]
    pub loading_threshold: f64,
    /// Scale → items dropped for wording reasons regardless of statistics.
    #[serde(default)]
    pub wording_overrides: BTreeMap<String, Vec<String>>,
}

fn default_item_total_threshold() -> f64 {
    0.3
}
fn default_loading_threshold() -> f64 {
    0.4
}

impl Default for ItemAnalysisSection {
    fn default() -> Self {
        Self {
            item_total_threshold: default_item_total_threshold(),
            loading_threshold: default_loading_threshold(),
            wording_overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaSection {
    #[serde(default = "default_pa_replications")]
    pub pa_replications: usize,
    #[serde(default = "default_pa_percentile")]
    pub pa_percentile: f64,
}

fn default_pa_replications() -> usize {
    1000
}
fn default_pa_percentile() -> f64 {
    0.95
}

impl Default for PcaSection {
    fn default() -> Self {
        Self {
            pa_replications: default_pa_replications(),
            pa_percentile: default_pa_percentile(),
        }
    }
}

/// Root configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Master seed; mandatory because every stochastic stage derives from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DatasetSchema>,
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_analysis: Option<ItemAnalysisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<PcaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<UsageSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSection>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config '{}': {e}", path.display()))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config '{}': {e}", path.display()))?;
        if let Some(schema) = &config.schema {
            schema
                .validate()
                .map_err(|e| anyhow::anyhow!("config field 'schema': {e}"))?;
        }
        Ok(config)
    }
}
