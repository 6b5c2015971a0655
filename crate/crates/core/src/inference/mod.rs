//! Classical baselines: OLS regression adjustment with sandwich standard
//! errors and two-sample balance tests.

pub mod ols;

pub use mean_tests::{chi_square_homogeneity, welch_mean_test, ChiSquareResult, MeanTestResult};
pub use ols::{fit_ols_robust, HcVariant, OlsOptions, OlsResult, OlsVariant};
