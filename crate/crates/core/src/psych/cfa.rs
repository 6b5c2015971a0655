//! Unidimensional confirmatory factor analysis by normal-theory maximum
//! likelihood, plus McDonald's ω.
//!
//! The discrepancy minimized is
//!
//! `F_ML = log|Σ(θ)| + tr(S Σ(θ)⁻¹) − log|S| − q`,  `Σ(θ) = λλᵀ + diag(ψ)`.
//!
//! The congeneric model estimates one loading per item; the tau-equivalent
//! model constrains all loadings equal. Optimization is BFGS on (λ, log ψ)
//! with seeded random restarts; uniquenesses are bounded below at 1e-4 and a
//! fit that lands on that bound is flagged as a Heywood case.

use super::block::ItemBlock;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const PSI_MIN: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-7;
const MAX_ITER: usize = 400;
const RESTARTS: u64 = 10;
const CFA_SEED: u64 = 0x0cfa;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfaModel {
    Congeneric,
    TauEquivalent,
}

#[derive(Debug, Clone)]
pub struct CfaFit {
    pub model: CfaModel,
    pub loadings: DVector<f64>,
    pub uniquenesses: DVector<f64>,
    /// Loadings standardized by model-implied item variances.
    pub std_loadings: DVector<f64>,
    pub std_uniquenesses: DVector<f64>,
    /// F_ML at the optimum.
    pub discrepancy: f64,
    /// Root mean square off-diagonal residual of the correlation matrix.
    pub rmsr: f64,
    pub converged: bool,
    pub heywood: bool,
    pub n: usize,
    pub q: usize,
}

/// McDonald's ω from a standardized congeneric solution:
/// `ω = (Σλ*)² / ((Σλ*)² + Σψ*)`.
pub fn mcdonald_omega(fit: &CfaFit) -> f64 {
    let loading_sum: f64 = fit.std_loadings.iter().sum();
    let psi_sum: f64 = fit.std_uniquenesses.iter().sum();
    let num = loading_sum * loading_sum;
    num / (num + psi_sum)
}

/// Sample covariance matrix (n − 1 denominator).
pub fn sample_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let q = data.ncols();
    let mut centered = data.clone();
    for j in 0..q {
        let m = data.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= m;
        }
    }
    centered.transpose() * centered / (n as f64 - 1.0)
}

struct Objective<'a> {
    s: &'a DMatrix<f64>,
    log_det_s: f64,
    q: usize,
    model: CfaModel,
}

impl Objective<'_> {
    fn n_params(&self) -> usize {
        match self.model {
            CfaModel::Congeneric => 2 * self.q,
            CfaModel::TauEquivalent => 1 + self.q,
        }
    }

    fn unpack(&self, theta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let q = self.q;
        match self.model {
            CfaModel::Congeneric => {
                let lambda = DVector::from_fn(q, |j, _| theta[j]);
                let psi = DVector::from_fn(q, |j, _| PSI_MIN + theta[q + j].exp());
                (lambda, psi)
            }
            CfaModel::TauEquivalent => {
                let lambda = DVector::from_element(q, theta[0]);
                let psi = DVector::from_fn(q, |j, _| PSI_MIN + theta[1 + j].exp());
                (lambda, psi)
            }
        }
    }

    /// F_ML and its gradient in the packed parameterization.
    fn eval(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let q = self.q;
        let (lambda, psi) = self.unpack(theta);
        let sigma = &lambda * lambda.transpose() + DMatrix::from_diagonal(&psi);
        let chol = match Cholesky::new(sigma.clone()) {
            Some(c) => c,
            None => return (f64::INFINITY, DVector::zeros(theta.len())),
        };
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let sigma_inv = chol.inverse();
        let trace = (self.s * &sigma_inv).trace();
        let f = log_det + trace - self.log_det_s - q as f64;

        // dF = tr(A dΣ) with A = Σ⁻¹(Σ − S)Σ⁻¹.
        let a = &sigma_inv * (&sigma - self.s) * &sigma_inv;
        let a_lambda = &a * &lambda;
        let mut grad = DVector::zeros(theta.len());
        match self.model {
            CfaModel::Congeneric => {
                for j in 0..q {
                    grad[j] = 2.0 * a_lambda[j];
                    grad[q + j] = a[(j, j)] * (psi[j] - PSI_MIN);
                }
            }
            CfaModel::TauEquivalent => {
                grad[0] = 2.0 * a_lambda.sum();
                for j in 0..q {
                    grad[1 + j] = a[(j, j)] * (psi[j] - PSI_MIN);
                }
            }
        }
        (f, grad)
    }
}

/// BFGS with Armijo backtracking. Returns (theta, f, converged).
fn bfgs(obj: &Objective<'_>, start: DVector<f64>) -> (DVector<f64>, f64, bool) {
    let dim = start.len();
    let mut theta = start;
    let (mut f, mut grad) = obj.eval(&theta);
    if !f.is_finite() {
        return (theta, f, false);
    }
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut converged = false;

    for _ in 0..MAX_ITER {
        if grad.norm() < GRAD_TOL {
            converged = true;
            break;
        }
        let mut direction = -(&h_inv * &grad);
        if direction.dot(&grad) >= 0.0 {
            // Reset a corrupted curvature estimate.
            h_inv = DMatrix::identity(dim, dim);
            direction = -grad.clone();
        }
        let slope = direction.dot(&grad);
        let mut step = 1.0;
        let mut accepted = false;
        let mut theta_new = theta.clone();
        let mut f_new = f;
        let mut grad_new = grad.clone();
        for _ in 0..50 {
            theta_new = &theta + &direction * step;
            // Keep log-uniqueness parameters in a numerically safe band.
            let lo = if matches!(obj.model, CfaModel::Congeneric) { obj.q } else { 1 };
            for j in lo..dim {
                theta_new[j] = theta_new[j].clamp(-30.0, 6.0);
            }
            let (fc, gc) = obj.eval(&theta_new);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                f_new = fc;
                grad_new = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }

        let s_vec = &theta_new - &theta;
        let y_vec = &grad_new - &grad;
        let sy = s_vec.dot(&y_vec);
        if sy > 1e-12 {
            // Standard BFGS inverse update.
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(dim, dim);
            let left = &i - &s_vec * y_vec.transpose() * rho;
            let right = &i - &y_vec * s_vec.transpose() * rho;
            h_inv = &left * h_inv * &right + &s_vec * s_vec.transpose() * rho;
        }
        theta = theta_new;
        f = f_new;
        grad = grad_new;
    }
    if !converged {
        converged = grad.norm() < GRAD_TOL * 10.0;
    }
    (theta, f, converged)
}

/// Fit a one-factor model to an item block.
pub fn fit_unidimensional_cfa(block: &ItemBlock, model: CfaModel) -> Result<CfaFit> {
    fit_cfa_from_data(block.matrix(), model)
}

/// Fit a one-factor model to raw data (rows = observations).
pub fn fit_cfa_from_data(data: &DMatrix<f64>, model: CfaModel) -> Result<CfaFit> {
    let n = data.nrows();
    let q = data.ncols();
    match model {
        CfaModel::Congeneric if q < 3 => {
            return Err(Error::validation(
                "congeneric model needs at least 3 items for identification",
            ));
        }
        CfaModel::TauEquivalent if q < 2 => {
            return Err(Error::validation("tau-equivalent model needs at least 2 items"));
        }
        _ => {}
    }
    if n < q + 1 {
        return Err(Error::validation("more items than observations"));
    }
    let s = sample_covariance(data);
    fit_cfa_from_cov(&s, n, model)
}

/// Fit a one-factor model to a covariance matrix computed elsewhere.
pub fn fit_cfa_from_cov(s: &DMatrix<f64>, n: usize, model: CfaModel) -> Result<CfaFit> {
    let q = s.nrows();
    for j in 0..q {
        if s[(j, j)] <= 0.0 {
            return Err(Error::estimation(format!("item {j} has zero variance")));
        }
    }
    let chol_s = Cholesky::new(s.clone())
        .ok_or_else(|| Error::estimation("sample covariance is not positive definite"))?;
    let log_det_s: f64 = chol_s.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let obj = Objective { s, log_det_s, q, model };

    // Deterministic start: communality 0.5 split.
    let mut starts: Vec<DVector<f64>> = Vec::new();
    let base = {
        let mut v = DVector::zeros(obj.n_params());
        match model {
            CfaModel::Congeneric => {
                for j in 0..q {
                    v[j] = (0.5 * s[(j, j)]).sqrt();
                    v[q + j] = (0.5 * s[(j, j)] - PSI_MIN).max(1e-3).ln();
                }
            }
            CfaModel::TauEquivalent => {
                let mean_var = (0..q).map(|j| s[(j, j)]).sum::<f64>() / q as f64;
                v[0] = (0.5 * mean_var).sqrt();
                for j in 0..q {
                    v[1 + j] = (0.5 * s[(j, j)] - PSI_MIN).max(1e-3).ln();
                }
            }
        }
        v
    };
    starts.push(base);
    for r in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(CFA_SEED, stream::CFA_RESTARTS, r));
        let mut v = DVector::zeros(obj.n_params());
        match model {
            CfaModel::Congeneric => {
                for j in 0..q {
                    v[j] = rng.gen_range(0.2..0.95) * s[(j, j)].sqrt();
                    v[q + j] = (rng.gen_range(0.2..0.8) * s[(j, j)]).ln();
                }
            }
            CfaModel::TauEquivalent => {
                let mean_var = (0..q).map(|j| s[(j, j)]).sum::<f64>() / q as f64;
                v[0] = rng.gen_range(0.2..0.95) * mean_var.sqrt();
                for j in 0..q {
                    v[1 + j] = (rng.gen_range(0.2..0.8) * s[(j, j)]).ln();
                }
            }
        }
        starts.push(v);
    }

    let mut best: Option<(DVector<f64>, f64, bool)> = None;
    for start in starts {
        let (theta, f, conv) = bfgs(&obj, start);
        if !f.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, bf, bconv)) => {
                // Prefer converged runs; among equals prefer lower discrepancy.
                (conv && !bconv && f <= bf + 1e-6) || f < bf - 1e-12
            }
        };
        if better {
            best = Some((theta, f, conv));
        }
    }
    let (theta, discrepancy, converged) =
        best.ok_or_else(|| Error::estimation("all CFA starts diverged"))?;

    let (mut loadings, uniquenesses) = obj.unpack(&theta);
    if loadings[0] < 0.0 {
        loadings.neg_mut();
    }
    let heywood = uniquenesses.iter().any(|&p| p <= PSI_MIN + 1e-6);

    let mut std_loadings = DVector::zeros(q);
    let mut std_uniquenesses = DVector::zeros(q);
    for j in 0..q {
        let implied_var = loadings[j] * loadings[j] + uniquenesses[j];
        std_loadings[j] = loadings[j] / implied_var.sqrt();
        std_uniquenesses[j] = 1.0 - std_loadings[j] * std_loadings[j];
    }

    // Standardized residuals: sample vs implied correlations.
    let sigma = &loadings * loadings.transpose() + DMatrix::from_diagonal(&uniquenesses);
    let mut resid_sq = 0.0;
    let mut pairs = 0usize;
    for a in 0..q {
        for b in (a + 1)..q {
            let r_obs = s[(a, b)] / (s[(a, a)] * s[(b, b)]).sqrt();
            let r_imp = sigma[(a, b)] / (sigma[(a, a)] * sigma[(b, b)]).sqrt();
            resid_sq += (r_obs - r_imp).powi(2);
            pairs += 1;
        }
    }
    let rmsr = if pairs > 0 { (resid_sq / pairs as f64).sqrt() } else { 0.0 };

    Ok(CfaFit {
        model,
        loadings,
        uniquenesses,
        std_loadings,
        std_uniquenesses,
        discrepancy,
        rmsr,
        converged,
        heywood,
        n,
        q,
    })
}

#[derive(Debug, Clone)]
pub struct TauEquivalenceTest {
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
    pub congeneric_discrepancy: f64,
    pub tau_discrepancy: f64,
}

/// Likelihood-ratio comparison of the tau-equivalent against the congeneric
/// model: `T = (n−1)(F_tau − F_cong)` on q−1 degrees of freedom.
pub fn tau_equivalence_test(data: &DMatrix<f64>) -> Result<TauEquivalenceTest> {
    let congeneric = fit_cfa_from_data(data, CfaModel::Congeneric)?;
    let tau = fit_cfa_from_data(data, CfaModel::TauEquivalent)?;
    let n = data.nrows();
    let q = data.ncols();
    let stat = ((n as f64 - 1.0) * (tau.discrepancy - congeneric.discrepancy)).max(0.0);
    let df = q - 1;
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::estimation(format!("chi-square distribution: {e}")))?;
    Ok(TauEquivalenceTest {
        chi_square: stat,
        df,
        p_value: 1.0 - dist.cdf(stat),
        congeneric_discrepancy: congeneric.discrepancy,
        tau_discrepancy: tau.discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::StandardNormal;

    /// Data from a one-factor model with the given loadings and uniquenesses.
    pub fn factor_data(
        n: usize,
        loadings: &[f64],
        uniquenesses: &[f64],
        seed: u64,
    ) -> DMatrix<f64> {
        let q = loadings.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = DMatrix::zeros(n, q);
        for i in 0..n {
            let f: f64 = rng.sample(StandardNormal);
            for j in 0..q {
                let e: f64 = rng.sample(StandardNormal);
                data[(i, j)] = loadings[j] * f + uniquenesses[j].sqrt() * e;
            }
        }
        data
    }

    #[test]
    fn recovers_known_loadings() {
        let data = factor_data(5000, &[0.7, 0.7, 0.7], &[0.51, 0.51, 0.51], 1);
        let fit = fit_cfa_from_data(&data, CfaModel::Congeneric).unwrap();
        assert!(fit.converged);
        assert!(!fit.heywood);
        for j in 0..3 {
            assert_abs_diff_eq!(fit.loadings[j], 0.7, epsilon = 0.03);
            assert_abs_diff_eq!(fit.uniquenesses[j], 0.51, epsilon = 0.04);
        }
    }

    #[test]
    fn omega_matches_analytic_value() {
        // Population: λ* = 0.7, ψ* = 0.51 ⇒ ω = 4.41/5.94.
        let fit = CfaFit {
            model: CfaModel::Congeneric,
            loadings: DVector::from_element(3, 0.7),
            uniquenesses: DVector::from_element(3, 0.51),
            std_loadings: DVector::from_element(3, 0.7),
            std_uniquenesses: DVector::from_element(3, 0.51),
            discrepancy: 0.0,
            rmsr: 0.0,
            converged: true,
            heywood: false,
            n: 0,
            q: 3,
        };
        assert_abs_diff_eq!(mcdonald_omega(&fit), 4.41 / 5.94, epsilon = 1e-12);
    }

    #[test]
    fn omega_estimate_close_to_population_value() {
        let data = factor_data(5000, &[0.7, 0.7, 0.7], &[0.51, 0.51, 0.51], 2);
        let fit = fit_cfa_from_data(&data, CfaModel::Congeneric).unwrap();
        assert_abs_diff_eq!(mcdonald_omega(&fit), 0.742, epsilon = 0.02);
    }

    #[test]
    fn vanishing_loadings_drive_omega_to_zero() {
        // Analytic: ω((Σλ*)²) → 0 as λ* → 0.
        let small = |l: f64| CfaFit {
            model: CfaModel::Congeneric,
            loadings: DVector::from_element(4, l),
            uniquenesses: DVector::from_element(4, 1.0 - l * l),
            std_loadings: DVector::from_element(4, l),
            std_uniquenesses: DVector::from_element(4, 1.0 - l * l),
            discrepancy: 0.0,
            rmsr: 0.0,
            converged: true,
            heywood: false,
            n: 0,
            q: 4,
        };
        assert!(mcdonald_omega(&small(0.05)) < 0.02);
        assert!(mcdonald_omega(&small(0.005)) < 2e-4);

        // Estimated on independent items the MLE may ride a Heywood ridge
        // (one uniqueness at the bound absorbs a full item); any such fit is
        // flagged, and a clean fit cannot sustain a non-trivial ω.
        let data = factor_data(4000, &[0.0; 6], &[1.0; 6], 3);
        let fit = fit_cfa_from_data(&data, CfaModel::Congeneric).unwrap();
        let omega = mcdonald_omega(&fit);
        assert!(
            fit.heywood || omega < 0.15,
            "omega = {omega}, heywood = {}, loadings = {:?}",
            fit.heywood,
            fit.std_loadings.as_slice()
        );
    }

    #[test]
    fn parallel_items_make_models_coincide() {
        let data = factor_data(4000, &[0.6, 0.6, 0.6, 0.6], &[0.64, 0.64, 0.64, 0.64], 4);
        let test = tau_equivalence_test(&data).unwrap();
        assert!(test.tau_discrepancy >= test.congeneric_discrepancy - 1e-10);
        assert!(
            test.tau_discrepancy - test.congeneric_discrepancy < 0.002,
            "gap = {}",
            test.tau_discrepancy - test.congeneric_discrepancy
        );
        assert!(test.p_value > 0.01);
    }

    #[test]
    fn unequal_loadings_reject_tau_equivalence() {
        let data = factor_data(4000, &[0.9, 0.3, 0.6, 0.8], &[0.19, 0.91, 0.64, 0.36], 5);
        let test = tau_equivalence_test(&data).unwrap();
        assert!(test.p_value < 0.001);
    }

    #[test]
    fn two_item_congeneric_is_unidentified() {
        let data = factor_data(100, &[0.7, 0.7], &[0.51, 0.51], 6);
        assert!(fit_cfa_from_data(&data, CfaModel::Congeneric).is_err());
        assert!(fit_cfa_from_data(&data, CfaModel::TauEquivalent).is_ok());
    }

    #[test]
    fn congeneric_discrepancy_never_exceeds_tau() {
        for seed in 0..5 {
            let data = factor_data(800, &[0.8, 0.5, 0.65, 0.7], &[0.36, 0.75, 0.58, 0.51], seed);
            let cong = fit_cfa_from_data(&data, CfaModel::Congeneric).unwrap();
            let tau = fit_cfa_from_data(&data, CfaModel::TauEquivalent).unwrap();
            assert!(cong.discrepancy <= tau.discrepancy + 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn heywood_case_is_bounded_and_flagged() {
        // A 3-item correlation matrix whose tetrad implies a communality
        // above one for item 0 (0.8·0.8/0.5 = 1.28), the classic Heywood
        // configuration; the matrix itself is positive definite.
        let s = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.80, 0.80, 0.80, 1.0, 0.50, 0.80, 0.50, 1.0],
        );
        let fit = fit_cfa_from_cov(&s, 500, CfaModel::Congeneric).unwrap();
        assert!(fit.uniquenesses.iter().all(|&p| p >= PSI_MIN));
        assert!(fit.heywood);
    }
}
