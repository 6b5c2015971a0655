//! K-fold cross-validation for the penalty of ridge and logistic-ridge fits.
//!
//! Fold assignment is a seeded shuffle, so a given seed always produces the
//! same partition. Ties in mean held-out loss are broken toward the larger
//! penalty.

use super::logistic::LogisticRidgeSolver;
use super::ridge::{FitOptions, RidgeSolver};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvLoss {
    SquaredError,
    LogLoss,
}

/// What to do when a training fold ends up with a single class under log loss.
#[derive(Debug, Clone, Copy)]
pub enum SingleClassPolicy {
    /// Reshuffle with a derived seed, up to the given number of attempts.
    Refold { max_attempts: usize },
    Error,
}

#[derive(Debug, Clone, Copy)]
pub struct CvOptions {
    pub folds: usize,
    pub loss: CvLoss,
    pub seed: u64,
    pub single_class: SingleClassPolicy,
    pub fit: FitOptions,
}

impl CvOptions {
    pub fn new(folds: usize, loss: CvLoss, seed: u64) -> Self {
        Self {
            folds,
            loss,
            seed,
            single_class: SingleClassPolicy::Refold { max_attempts: 100 },
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub selected_lambda: f64,
    /// (λ, mean held-out loss), sorted by λ ascending.
    pub loss_curve: Vec<(f64, f64)>,
    /// Fold index of every observation.
    pub fold_assignment: Vec<usize>,
}

/// Default grid: 50 log-spaced points on [1e-4, 1e4] scaled by the mean
/// column standard deviation of `x`.
pub fn default_lambda_grid(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    let p = x.ncols();
    let mut mean_sd = 0.0;
    for j in 0..p {
        let col = x.column(j);
        let m = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - m).powi(2)).sum();
        mean_sd += (ss / (n as f64 - 1.0).max(1.0)).sqrt();
    }
    mean_sd /= p.max(1) as f64;
    let scale = if mean_sd > 0.0 { mean_sd } else { 1.0 };
    log_spaced_grid(1e-4 * scale, 1e4 * scale, 50)
}

pub fn log_spaced_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn shuffled_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % folds;
    }
    assignment
}

fn folds_have_both_classes(y: &DVector<f64>, assignment: &[usize], folds: usize) -> bool {
    for k in 0..folds {
        let mut ones = 0usize;
        let mut zeros = 0usize;
        for (i, &f) in assignment.iter().enumerate() {
            if f != k {
                if y[i] == 1.0 {
                    ones += 1;
                } else {
                    zeros += 1;
                }
            }
        }
        if ones == 0 || zeros == 0 {
            return false;
        }
    }
    true
}

/// Select a penalty from `grid` by K-fold cross-validation.
pub fn cross_validate(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &[f64],
    options: CvOptions,
) -> Result<CvResult> {
    let n = x.nrows();
    if options.folds < 2 {
        return Err(Error::validation("cross-validation needs at least 2 folds"));
    }
    if options.folds > n {
        return Err(Error::validation("more folds than observations"));
    }
    if grid.is_empty() {
        return Err(Error::validation("empty penalty grid"));
    }
    let mut sorted_grid: Vec<f64> = grid.to_vec();
    sorted_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut assignment = shuffled_folds(n, options.folds, derive_seed(options.seed, stream::CV_FOLDS, 0));
    if options.loss == CvLoss::LogLoss && !folds_have_both_classes(y, &assignment, options.folds) {
        match options.single_class {
            SingleClassPolicy::Error => {
                return Err(Error::estimation(
                    "a cross-validation training fold contains a single class",
                ));
            }
            SingleClassPolicy::Refold { max_attempts } => {
                let mut ok = false;
                for attempt in 1..=max_attempts {
                    assignment = shuffled_folds(
                        n,
                        options.folds,
                        derive_seed(options.seed, stream::CV_FOLDS, attempt as u64),
                    );
                    if folds_have_both_classes(y, &assignment, options.folds) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::estimation(
                        "could not build folds with both classes in every training set",
                    ));
                }
            }
        }
    }

    let mut total_loss = vec![0.0f64; sorted_grid.len()];
    let mut total_count = vec![0usize; sorted_grid.len()];
    for k in 0..options.folds {
        let train_idx: Vec<usize> = (0..n).filter(|i| assignment[*i] != k).collect();
        let test_idx: Vec<usize> = (0..n).filter(|i| assignment[*i] == k).collect();
        if test_idx.is_empty() {
            continue;
        }
        let x_train = x.select_rows(train_idx.as_slice());
        let y_train = DVector::from_iterator(train_idx.len(), train_idx.iter().map(|&i| y[i]));
        let x_test = x.select_rows(test_idx.as_slice());
        let y_test = DVector::from_iterator(test_idx.len(), test_idx.iter().map(|&i| y[i]));

        match options.loss {
            CvLoss::SquaredError => {
                let solver = RidgeSolver::new(&x_train, options.fit)?;
                for (g, &lambda) in sorted_grid.iter().enumerate() {
                    let fit = solver.fit(&y_train, lambda)?;
                    let pred = fit.predict(&x_test);
                    let loss: f64 =
                        (0..test_idx.len()).map(|i| (pred[i] - y_test[i]).powi(2)).sum();
                    total_loss[g] += loss;
                    total_count[g] += test_idx.len();
                }
            }
            CvLoss::LogLoss => {
                let solver = LogisticRidgeSolver::new(&x_train, options.fit)?;
                // Walk the grid from the largest penalty down, warm starting
                // each fit from the previous solution.
                let mut warm: Option<(DVector<f64>, f64)> = None;
                for (g, &lambda) in sorted_grid.iter().enumerate().rev() {
                    let fit = solver.fit_warm(
                        &y_train,
                        lambda,
                        warm.as_ref().map(|(b, b0)| (b, *b0)),
                    )?;
                    warm = Some(solver.working_params(&fit));
                    let pred = fit.predict_proba(&x_test);
                    let loss: f64 = (0..test_idx.len())
                        .map(|i| {
                            let p = pred[i].clamp(1e-12, 1.0 - 1e-12);
                            if y_test[i] == 1.0 {
                                -p.ln()
                            } else {
                                -(1.0 - p).ln()
                            }
                        })
                        .sum();
                    total_loss[g] += loss;
                    total_count[g] += test_idx.len();
                }
            }
        }
    }

    let loss_curve: Vec<(f64, f64)> = sorted_grid
        .iter()
        .zip(total_loss.iter().zip(total_count.iter()))
        .map(|(&l, (&s, &c))| (l, s / c as f64))
        .collect();

    // Scan ascending with `<=` so exact ties resolve to the larger penalty.
    let mut best = 0usize;
    for g in 1..loss_curve.len() {
        if loss_curve[g].1 <= loss_curve[best].1 {
            best = g;
        }
    }

    Ok(CvResult { selected_lambda: loss_curve[best].0, loss_curve, fold_assignment: assignment })
}
