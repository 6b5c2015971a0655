//! Scale construction and diagnostics: reliability, unidimensional CFA,
//! item selection, polychoric correlations, sampling adequacy, and
//! eigenvalue retention criteria.

pub mod adequacy;
pub mod block;
pub mod cfa;
pub mod item_analysis;
pub mod polychoric;
pub mod reliability;
pub mod retention;

pub use adequacy::{sampling_adequacy, AdequacyReport};
pub use block::{score_scale_means, ItemBlock};
pub use cfa::{
    fit_cfa_from_cov, fit_cfa_from_data, fit_unidimensional_cfa, mcdonald_omega,
    sample_covariance, tau_equivalence_test, CfaFit, CfaModel, TauEquivalenceTest,
};
pub use item_analysis::{
    apply_item_selection, run_item_analysis, DropReason, FlagThresholds, ItemAnalysisReport,
    ItemFlags, SelectionOutcome,
};
pub use polychoric::{
    polychoric_matrix, polychoric_pair, PolychoricEstimate, PolychoricMatrix, RHO_CLIP,
};
pub use reliability::{
    cronbach_alpha, item_total_correlations, standardized_alpha, AlphaEstimate,
};
pub use retention::{
    parallel_analysis_reference, retention_criteria, sorted_eigenvalues, PaConfig,
    RetentionReport,
};
