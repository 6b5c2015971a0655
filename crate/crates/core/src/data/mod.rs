//! Data ingestion: observation tables, scale definitions, design matrices,
//! and analysis-sample selection.

pub mod dataset;
pub mod design;
pub mod sample;
pub mod schema;

pub use dataset::{load_dataset, CovariateColumn, Dataset, LIKERT_MAX, LIKERT_MIN};
pub use design::{build_design_matrix, CategoricalEncoding, DesignMatrix};
pub use sample::{select_sample, SampleCounts, SampleSpec};
pub use schema::{CovariateKind, CovariateSchema, DatasetSchema, Questionnaire, ScaleDefinition};
