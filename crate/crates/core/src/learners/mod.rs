//! Penalized prediction machinery: ridge regression in spectral closed form,
//! principal component regression, L2-penalized logistic classification, and
//! cross-validated penalty selection.

pub mod cv;
pub mod logistic;
pub mod pcr;
pub mod ridge;
pub mod scaling;
pub mod spectral;

pub use cv::{cross_validate, default_lambda_grid, log_spaced_grid, CvLoss, CvOptions, CvResult, SingleClassPolicy};
pub use logistic::{fit_logistic_ridge, sigmoid, LogisticRidgeFit, LogisticRidgeSolver};
pub use pcr::{first_pc_scores, fit_pcr, PcrFit};
pub use ridge::{fit_ridge, FitOptions, RidgeFit, RidgeSolver};
pub use scaling::ColumnScaling;
pub use spectral::SpectralDecomposition;
