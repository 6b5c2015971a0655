//! L2-penalized logistic regression fitted by iteratively reweighted
//! penalized least squares.
//!
//! The objective is the penalized negative log-likelihood
//!
//! `J(β₀, β) = −Σ[yᵢ log pᵢ + (1−yᵢ) log(1−pᵢ)] + (λ/2)‖β‖²`
//!
//! with the intercept left unpenalized. Each Newton step solves
//! `(XᵀWX + λI*) δ = Xᵀ(y − p) − λβ*` and is backtracked until the objective
//! does not increase, so the iteration trace is monotone. Columns are
//! standardized internally; reported coefficients are on the input scale.

use super::ridge::FitOptions;
use super::scaling::ColumnScaling;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOL: f64 = 1e-8;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A fitted L2-penalized logistic regression.
#[derive(Debug, Clone)]
pub struct LogisticRidgeFit {
    pub coefficients: DVector<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Penalized negative log-likelihood at each accepted iterate.
    pub objective_trace: Vec<f64>,
}

impl LogisticRidgeFit {
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let eta = x * &self.coefficients;
        DVector::from_fn(x.nrows(), |i, _| sigmoid(eta[i] + self.intercept))
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let eta: f64 = row.iter().zip(self.coefficients.iter()).map(|(x, b)| x * b).sum();
        sigmoid(eta + self.intercept)
    }
}

/// Reusable standardized design for fitting several (y, λ) pairs.
pub struct LogisticRidgeSolver {
    work: DMatrix<f64>,
    scaling: ColumnScaling,
    n: usize,
    p: usize,
}

impl LogisticRidgeSolver {
    pub fn new(x: &DMatrix<f64>, options: FitOptions) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::validation("logistic regression needs at least 2 observations"));
        }
        let (scaling, work) = ColumnScaling::fit(x, options.intercept, options.standardize);
        Ok(Self { work, scaling, n, p: x.ncols() })
    }

    pub fn fit(&self, y: &DVector<f64>, lambda: f64) -> Result<LogisticRidgeFit> {
        self.fit_warm(y, lambda, None)
    }

    /// Fit with an optional warm start `(slopes_on_working_scale, intercept)`.
    pub fn fit_warm(
        &self,
        y: &DVector<f64>,
        lambda: f64,
        warm: Option<(&DVector<f64>, f64)>,
    ) -> Result<LogisticRidgeFit> {
        if y.len() != self.n {
            return Err(Error::validation("response length does not match design rows"));
        }
        if !(lambda > 0.0) {
            return Err(Error::validation("logistic ridge penalty must be positive"));
        }
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::validation("logistic response must be coded 0/1"));
        }
        if ones == 0 || ones == self.n {
            return Err(Error::validation("both classes must be present"));
        }

        let mut beta = DVector::zeros(self.p);
        let base_rate = ones as f64 / self.n as f64;
        let mut intercept = (base_rate / (1.0 - base_rate)).ln();
        if let Some((b, b0)) = warm {
            beta = b.clone();
            intercept = b0;
        }

        let mut objective = self.objective(y, &beta, intercept, lambda);
        let mut trace = vec![objective];
        let mut converged = false;
        let mut iterations = 0;

        for iter in 0..MAX_ITERATIONS {
            iterations = iter + 1;
            let eta = &self.work * &beta;
            let p_hat = DVector::from_fn(self.n, |i, _| sigmoid(eta[i] + intercept));

            // Gradient of J: [Σ(p − y); Xᵀ(p − y) + λβ].
            let resid = &p_hat - y;
            let grad0: f64 = resid.sum();
            let grad = self.work.transpose() * &resid + &beta * lambda;
            let grad_norm = grad.norm_squared() + grad0 * grad0;
            if grad_norm.sqrt() < GRADIENT_TOL {
                converged = true;
                break;
            }

            // Newton system on the augmented design [1 X].
            let w = DVector::from_fn(self.n, |i, _| (p_hat[i] * (1.0 - p_hat[i])).max(1e-10));
            let mut h = DMatrix::zeros(self.p + 1, self.p + 1);
            // H = [Σw, (Xᵀw)ᵀ; Xᵀw, XᵀWX + λI]
            h[(0, 0)] = w.sum();
            let xtw = {
                let mut v = DVector::zeros(self.p);
                for j in 0..self.p {
                    let mut acc = 0.0;
                    for i in 0..self.n {
                        acc += self.work[(i, j)] * w[i];
                    }
                    v[j] = acc;
                }
                v
            };
            for j in 0..self.p {
                h[(0, j + 1)] = xtw[j];
                h[(j + 1, 0)] = xtw[j];
            }
            let mut xw = self.work.clone();
            for i in 0..self.n {
                let wi = w[i];
                for j in 0..self.p {
                    xw[(i, j)] *= wi;
                }
            }
            let xtwx = self.work.transpose() * xw;
            for a in 0..self.p {
                for b in 0..self.p {
                    h[(a + 1, b + 1)] = xtwx[(a, b)] + if a == b { lambda } else { 0.0 };
                }
            }

            let mut rhs = DVector::zeros(self.p + 1);
            rhs[0] = -grad0;
            for j in 0..self.p {
                rhs[j + 1] = -grad[j];
            }
            let step = match h.cholesky() {
                Some(chol) => chol.solve(&rhs),
                None => {
                    return Err(Error::estimation("singular IRLS system"));
                }
            };

            // Backtrack until the objective does not increase.
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand_intercept = intercept + scale * step[0];
                let cand_beta = &beta + step.rows(1, self.p) * scale;
                let cand_obj = self.objective(y, &cand_beta, cand_intercept, lambda);
                if cand_obj <= objective + 1e-12 {
                    beta = cand_beta;
                    intercept = cand_intercept;
                    objective = cand_obj;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            trace.push(objective);
            if !accepted {
                break;
            }
        }

        if !converged {
            // Final gradient check in case the loop exhausted its budget right
            // at the solution.
            let eta = &self.work * &beta;
            let p_hat = DVector::from_fn(self.n, |i, _| sigmoid(eta[i] + intercept));
            let resid = &p_hat - y;
            let grad0: f64 = resid.sum();
            let grad = self.work.transpose() * &resid + &beta * lambda;
            converged = (grad.norm_squared() + grad0 * grad0).sqrt() < GRADIENT_TOL;
        }

        let (coefficients, final_intercept) = self.scaling.backtransform(&beta, intercept);
        Ok(LogisticRidgeFit {
            coefficients,
            intercept: final_intercept,
            lambda,
            converged,
            iterations,
            objective_trace: trace,
        })
    }

    /// Working-scale parameters for warm starting, from a previous fit.
    pub fn working_params(&self, fit: &LogisticRidgeFit) -> (DVector<f64>, f64) {
        let mut beta = DVector::zeros(self.p);
        let mut intercept = fit.intercept;
        for j in 0..self.p {
            beta[j] = fit.coefficients[j] * self.scaling.scales[j];
            intercept += fit.coefficients[j] * self.scaling.means[j];
        }
        (beta, intercept)
    }

    fn objective(&self, y: &DVector<f64>, beta: &DVector<f64>, intercept: f64, lambda: f64) -> f64 {
        let eta = &self.work * beta;
        let mut nll = 0.0;
        for i in 0..self.n {
            let z = eta[i] + intercept;
            // log(1 + e^z) evaluated stably.
            let log1pe = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            nll += log1pe - y[i] * z;
        }
        nll + 0.5 * lambda * beta.norm_squared()
    }
}

/// Fit a single penalized logistic regression.
pub fn fit_logistic_ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    options: FitOptions,
) -> Result<LogisticRidgeFit> {
    LogisticRidgeSolver::new(x, options)?.fit(y, lambda)
}
