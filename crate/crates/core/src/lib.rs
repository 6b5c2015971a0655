//! Cohort-comparison analysis toolkit.
//!
//! Implements the full estimation pipeline for two-cohort observational
//! studies with high-dimensional questionnaire covariates: doubly robust
//! double machine learning for average treatment effects with ridge/PCR
//! nuisance learners, classical OLS baselines with sandwich standard errors,
//! a psychometric scale-construction toolkit (reliability, CFA, polychoric
//! correlations, factor retention), engagement measures from raw event logs,
//! and a synthetic-cohort simulator with known ground truth that serves as
//! the verification oracle for everything else.

pub mod data;
pub mod dml;
pub mod error;
pub mod inference;
pub mod learners;
pub mod psych;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod usage;

pub use error::{Error, Result};
