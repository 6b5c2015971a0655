//! Column centering/scaling shared by the penalized learners.
//!
//! Penalties are applied on standardized columns so that dummy indicators and
//! Likert items face comparable shrinkage; coefficients are mapped back to the
//! original scale afterwards. The intercept is never penalized.

use nalgebra::{DMatrix, DVector};

/// Per-column centering and scaling parameters.
#[derive(Debug, Clone)]
pub struct ColumnScaling {
    pub means: DVector<f64>,
    pub scales: DVector<f64>,
    pub centered: bool,
    pub standardized: bool,
}

impl ColumnScaling {
    /// Identity scaling (no centering, unit scales).
    pub fn identity(p: usize) -> Self {
        Self {
            means: DVector::zeros(p),
            scales: DVector::from_element(p, 1.0),
            centered: false,
            standardized: false,
        }
    }

    /// Fit scaling parameters on `x` and return the transformed matrix.
    ///
    /// Columns with (near-)zero sample variance keep scale 1; after centering
    /// they are identically zero and drop out of any penalized fit.
    pub fn fit(x: &DMatrix<f64>, center: bool, standardize: bool) -> (Self, DMatrix<f64>) {
        let n = x.nrows();
        let p = x.ncols();
        let mut means = DVector::zeros(p);
        let mut scales = DVector::from_element(p, 1.0);
        let mut work = x.clone();
        for j in 0..p {
            let col = x.column(j);
            let col_mean = col.sum() / n as f64;
            let m = if center { col_mean } else { 0.0 };
            means[j] = m;
            if standardize && n > 1 {
                let ss: f64 = col.iter().map(|v| (v - col_mean).powi(2)).sum();
                let sd = (ss / (n as f64 - 1.0)).sqrt();
                if sd > 1e-12 {
                    scales[j] = sd;
                }
            }
            for i in 0..n {
                work[(i, j)] = (x[(i, j)] - m) / scales[j];
            }
        }
        (Self { means, scales, centered: center, standardized: standardize }, work)
    }

    /// Apply the fitted transform to new rows.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut work = x.clone();
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                work[(i, j)] = (x[(i, j)] - self.means[j]) / self.scales[j];
            }
        }
        work
    }

    /// Map coefficients fitted on the working scale back to the original scale,
    /// returning `(coefficients, intercept)` where the intercept absorbs the
    /// column means and the working-scale offset `b0`.
    pub fn backtransform(&self, beta_work: &DVector<f64>, b0: f64) -> (DVector<f64>, f64) {
        let mut beta = beta_work.clone();
        let mut intercept = b0;
        for j in 0..beta.len() {
            beta[j] = beta_work[j] / self.scales[j];
            intercept -= beta[j] * self.means[j];
        }
        (beta, intercept)
    }
}
