//! Ridge regression in closed form through the singular value decomposition.
//!
//! On the working (centered/standardized) scale the coefficients are
//!
//! `β̂(λ) = V · diag(σ_j / (σ_j² + λ)) · Uᵀ y`
//!
//! so the fitted values damp each `u_j`-coordinate of `y` by
//! `σ_j² / (σ_j² + λ)`. The decomposition is computed once per design matrix;
//! solving for another λ or another response is then a couple of
//! matrix-vector products, which is what makes cross-validated grids and
//! repeated cross-fitting affordable.

use super::scaling::ColumnScaling;
use super::spectral::SpectralDecomposition;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Preprocessing applied before penalization.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Fit an unpenalized intercept on centered data.
    pub intercept: bool,
    /// Scale columns to unit sample variance before penalizing.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { intercept: true, standardize: true }
    }
}

impl FitOptions {
    /// No intercept, no standardization: the raw spectral formula.
    pub fn raw() -> Self {
        Self { intercept: false, standardize: false }
    }
}

/// A fitted ridge regression, with coefficients on the original input scale.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub coefficients: DVector<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub scaling: ColumnScaling,
}

impl RidgeFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut out = x * &self.coefficients;
        out.add_scalar_mut(self.intercept);
        out
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row.iter().zip(self.coefficients.iter()).map(|(x, b)| x * b).sum::<f64>()
    }
}

/// Reusable factorization of one design matrix.
///
/// `fit` solves for any `(y, λ)` pair against the cached decomposition.
pub struct RidgeSolver {
    decomposition: SpectralDecomposition,
    scaling: ColumnScaling,
    options: FitOptions,
    n: usize,
}

impl RidgeSolver {
    pub fn new(x: &DMatrix<f64>, options: FitOptions) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::validation("ridge regression needs at least 2 observations"));
        }
        let (scaling, work) = ColumnScaling::fit(x, options.intercept, options.standardize);
        let decomposition = SpectralDecomposition::new(&work)?;
        Ok(Self { decomposition, scaling, options, n })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn fit(&self, y: &DVector<f64>, lambda: f64) -> Result<RidgeFit> {
        if y.len() != self.n {
            return Err(Error::validation(format!(
                "response length {} does not match design rows {}",
                y.len(),
                self.n
            )));
        }
        if !(lambda >= 0.0) {
            return Err(Error::validation("ridge penalty must be nonnegative"));
        }
        let rank = self.decomposition.rank();
        let p = self.decomposition.v().nrows();
        if lambda == 0.0 && rank < p {
            return Err(Error::estimation(
                "lambda = 0 on a rank-deficient design has no unique solution",
            ));
        }

        let y_mean = if self.options.intercept { y.sum() / self.n as f64 } else { 0.0 };
        let y_work = y.map(|v| v - y_mean);

        // β_work = V · diag(σ/(σ² + λ)) · Uᵀ y_work, skipping null directions.
        let coords = self.decomposition.u_coordinates(&y_work);
        let s = self.decomposition.singular_values();
        let tol = self.decomposition.rank_tolerance();
        let mut weighted = DVector::zeros(coords.len());
        for j in 0..coords.len() {
            if s[j] > tol {
                weighted[j] = s[j] / (s[j] * s[j] + lambda) * coords[j];
            }
        }
        let beta_work = self.decomposition.v() * weighted;
        let (coefficients, intercept) = self.scaling.backtransform(&beta_work, y_mean);
        Ok(RidgeFit { coefficients, intercept, lambda, scaling: self.scaling.clone() })
    }
}

/// Fit a single ridge regression. See [`RidgeSolver`] for grid reuse.
pub fn fit_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    options: FitOptions,
) -> Result<RidgeFit> {
    RidgeSolver::new(x, options)?.fit(y, lambda)
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

    /// Direct solve of (XᵀX + λI)β = Xᵀy, the independent normal-equation route.
    fn normal_equation_oracle(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let p = x.ncols();
        let lhs = x.transpose() * x + DMatrix::identity(p, p) * lambda;
        let rhs = x.transpose() * y;
        lhs.lu().solve(&rhs).expect("oracle solve failed")
    }

    #[test]
    fn identity_design_halves_response_at_unit_penalty() {
        let n = 5;
        let x = DMatrix::<f64>::identity(n, n);
        let y = DVector::from_vec(vec![2.0, -1.0, 0.5, 3.0, -4.0]);
        let fit = fit_ridge(&x, &y, 1.0, FitOptions::raw()).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(fit.coefficients[i], y[i] / 2.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(fit.intercept, 0.0);
    }

    #[test]
    fn zero_penalty_on_full_rank_design_equals_ols() {
        let (x, y) = random_problem(25, 4, 3);
        let fit = fit_ridge(&x, &y, 0.0, FitOptions::raw()).unwrap();
        let ols = normal_equation_oracle(&x, &y, 0.0);
        assert!((fit.coefficients - ols).abs().max() < 1e-8);
    }

    #[test]
    fn matches_normal_equation_oracle() {
        let (x, y) = random_problem(20, 5, 7);
        for &lambda in &[0.01, 0.5, 3.0, 40.0] {
            let fit = fit_ridge(&x, &y, lambda, FitOptions::raw()).unwrap();
            let oracle = normal_equation_oracle(&x, &y, lambda);
            assert!(
                (fit.coefficients.clone() - oracle).abs().max() < 1e-8,
                "mismatch at lambda={lambda}"
            );
        }
    }

    #[test]
    fn rank_deficient_unpenalized_fit_errors() {
        let (mut x, y) = random_problem(15, 4, 11);
        let dup = x.column(1).into_owned();
        x.set_column(3, &dup);
        assert!(fit_ridge(&x, &y, 0.0, FitOptions::raw()).is_err());
        assert!(fit_ridge(&x, &y, 0.5, FitOptions::raw()).is_ok());
    }

    #[test]
    fn shrinkage_is_monotone_in_lambda() {
        let (x, y) = random_problem(40, 6, 5);
        let solver = RidgeSolver::new(&x, FitOptions::default()).unwrap();
        let mut previous = f64::INFINITY;
        for &lambda in &[0.0, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let norm = solver.fit(&y, lambda).unwrap().coefficients.norm();
            assert!(norm <= previous + 1e-10, "norm grew at lambda={lambda}");
            previous = norm;
        }
    }

    #[test]
    fn intercept_recovers_shifted_mean() {
        let (x, _) = random_problem(50, 3, 9);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = &x * &beta + DVector::from_element(50, 7.0);
        let fit = fit_ridge(&x, &y, 0.0, FitOptions::default()).unwrap();
        assert_abs_diff_eq!(fit.intercept, 7.0, epsilon = 1e-8);
        assert!((fit.predict(&x) - y).abs().max() < 1e-8);
    }
}
