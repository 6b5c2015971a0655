//! Synthetic cohorts with known ground truth: the verification oracle for
//! the estimators and the psychometric toolkit.

pub mod benchmark;
pub mod generate;
pub mod spec;

pub use benchmark::{
    run_benchmark, BenchmarkEstimator, BenchmarkRow, BenchmarkTable, DmlSettings,
};
pub use generate::{
    export_dataset_csv, export_schema, export_truth_csv, generate_cohort, oracle_ate,
    CohortTruth, SyntheticCohort, UsageBundle,
};
pub use spec::{
    default_thresholds, CohortSpec, EffectSpec, OutcomeLink, OutcomeSpec, ScaleSimSpec,
    SecondaryOutcomeSpec, TreatmentSpec, UsageSimSpec,
};
