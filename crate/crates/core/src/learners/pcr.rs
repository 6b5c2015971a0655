//! Principal component regression via truncated SVD.
//!
//! Where ridge damps every `u_j`-coordinate of `y`, PCR keeps the first `k`
//! coordinates untouched and discards the rest: fitted values are
//! `Σ_{j≤k} u_j u_jᵀ y` on the working scale.

use super::ridge::FitOptions;
use super::scaling::ColumnScaling;
use super::spectral::SpectralDecomposition;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A fitted principal component regression.
#[derive(Debug, Clone)]
pub struct PcrFit {
    pub coefficients: DVector<f64>,
    pub intercept: f64,
    pub components: usize,
}

impl PcrFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut out = x * &self.coefficients;
        out.add_scalar_mut(self.intercept);
        out
    }
}

/// Regress `y` on the first `k` principal components of `x`.
pub fn fit_pcr(x: &DMatrix<f64>, y: &DVector<f64>, k: usize, options: FitOptions) -> Result<PcrFit> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::validation("PCR needs at least 2 observations"));
    }
    if y.len() != n {
        return Err(Error::validation("response length does not match design rows"));
    }
    let (scaling, work) = ColumnScaling::fit(x, options.intercept, options.standardize);
    let decomposition = SpectralDecomposition::new(&work)?;
    let rank = decomposition.rank();
    if k > rank {
        return Err(Error::validation(format!(
            "requested {k} components but the design has rank {rank}"
        )));
    }

    let y_mean = if options.intercept { y.sum() / n as f64 } else { 0.0 };
    let y_work = y.map(|v| v - y_mean);

    // β_work = Σ_{j≤k} v_j σ_j⁻¹ (u_jᵀ y); fitted values are then Σ_{j≤k} u_j u_jᵀ y.
    let coords = decomposition.u_coordinates(&y_work);
    let s = decomposition.singular_values();
    let mut weighted = DVector::zeros(coords.len());
    for j in 0..k {
        weighted[j] = coords[j] / s[j];
    }
    let beta_work = decomposition.v() * weighted;
    let (coefficients, intercept) = scaling.backtransform(&beta_work, y_mean);
    Ok(PcrFit { coefficients, intercept, components: k })
}

/// Scores and loadings of the first principal component of `x`.
///
/// Columns are standardized first; the loading of the first column is fixed
/// to be nonnegative so results do not depend on SVD sign conventions.
pub fn first_pc_scores(x: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    if x.nrows() < 2 || x.ncols() < 1 {
        return Err(Error::validation("principal component needs a nonempty matrix"));
    }
    let (_, work) = ColumnScaling::fit(x, true, true);
    let decomposition = SpectralDecomposition::new(&work)?;
    let mut loading = decomposition.v().column(0).into_owned();
    if loading[0] < 0.0 {
        loading.neg_mut();
    }
    let scores = work * &loading;
    Ok((scores, loading))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_problem(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        (x, y)
    }

    fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        let lhs = x.transpose() * x;
        let rhs = x.transpose() * y;
        lhs.lu().solve(&rhs).unwrap()
    }

    #[test]
    fn full_component_count_equals_ols() {
        let (x, y) = random_problem(30, 5, 1);
        let fit = fit_pcr(&x, &y, 5, FitOptions::raw()).unwrap();
        let ols = ols_fit(&x, &y);
        assert!((fit.coefficients - ols).abs().max() < 1e-10);
    }

    #[test]
    fn zero_components_gives_mean_prediction() {
        let (x, y) = random_problem(20, 4, 2);
        let fit = fit_pcr(&x, &y, 0, FitOptions::default()).unwrap();
        assert_abs_diff_eq!(fit.coefficients.norm(), 0.0);
        let ybar = y.sum() / y.len() as f64;
        assert_abs_diff_eq!(fit.intercept, ybar, epsilon = 1e-12);
    }

    #[test]
    fn truncated_fit_matches_explicit_svd_oracle() {
        let (x, y) = random_problem(30, 6, 3);
        let k = 2;
        let fit = fit_pcr(&x, &y, k, FitOptions::raw()).unwrap();

        // Oracle: project y onto the span of the first k left singular vectors.
        let svd = x.clone().svd(true, true);
        let u = svd.u.unwrap();
        let mut fitted_oracle = DVector::zeros(30);
        for j in 0..k {
            let uj = u.column(j);
            let coord: f64 = uj.dot(&y);
            fitted_oracle += uj * coord;
        }
        let fitted = fit.predict(&x);
        assert!((fitted - fitted_oracle).abs().max() < 1e-10);
    }

    #[test]
    fn too_many_components_errors() {
        let (x, y) = random_problem(10, 4, 4);
        assert!(fit_pcr(&x, &y, 5, FitOptions::raw()).is_err());
    }

    #[test]
    fn rss_is_nonincreasing_in_components() {
        let (x, y) = random_problem(40, 6, 5);
        let mut previous = f64::INFINITY;
        for k in 0..=6 {
            let fit = fit_pcr(&x, &y, k, FitOptions::default()).unwrap();
            let rss = (&y - fit.predict(&x)).norm_squared();
            assert!(rss <= previous + 1e-10, "RSS grew at k={k}");
            previous = rss;
        }
    }

    #[test]
    fn first_pc_sign_is_fixed() {
        let (x, _) = random_problem(25, 3, 6);
        let (scores, loading) = first_pc_scores(&x).unwrap();
        assert!(loading[0] >= 0.0);
        let (scores_again, _) = first_pc_scores(&x).unwrap();
        assert!((scores - scores_again).abs().max() == 0.0);
    }
}
