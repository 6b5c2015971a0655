//! Cross-fitted nuisance estimation for one repetition.
//!
//! Each repetition draws its own K-fold partition from a derived seed. The
//! ridge/logistic penalties are tuned once per repetition by inner
//! cross-validation on the first training fold and reused across folds.
//! Every observation's nuisance predictions come from models trained
//! strictly out of fold.

use super::score::{InteractiveNuisances, PartiallyLinearNuisances};
use super::{DmlConfig, OutcomeKind};
use crate::error::{Error, Result};
use crate::learners::{
    cross_validate, default_lambda_grid, CvLoss, CvOptions, FitOptions, LogisticRidgeSolver,
    RidgeSolver,
};
use crate::seed::{derive_seed, stream};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) struct RepetitionInputs<'a> {
    pub x: &'a DMatrix<f64>,
    pub d: &'a [u8],
    pub y: &'a [f64],
    pub binary_outcome: bool,
}

pub(crate) struct ClipStats {
    pub clipped: usize,
    pub total: usize,
}

/// K-fold assignment whose every training complement contains both treatment
/// arms (with at least 2 observations each); reshuffles on failure.
fn workable_folds(d: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = d.len();
    for attempt in 0..100u64 {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::CV_FOLDS, attempt));
        order.shuffle(&mut rng);
        let mut assignment = vec![0usize; n];
        for (pos, &idx) in order.iter().enumerate() {
            assignment[idx] = pos % folds;
        }
        let ok = (0..folds).all(|k| {
            let mut treated = 0usize;
            let mut control = 0usize;
            for i in 0..n {
                if assignment[i] != k {
                    if d[i] == 1 {
                        treated += 1;
                    } else {
                        control += 1;
                    }
                }
            }
            treated >= 2 && control >= 2
        });
        if ok {
            return Ok(assignment);
        }
    }
    Err(Error::estimation(
        "could not build cross-fitting folds with both arms in every training set",
    ))
}

fn rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    x.select_rows(idx)
}

fn subvec(y: &[f64], idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| y[i]))
}

/// Tune the outcome-model penalty on `train`, with `d` appended as a column.
fn tune_outcome_lambda(
    inputs: &RepetitionInputs<'_>,
    train: &[usize],
    cfg: &DmlConfig,
    rep_seed: u64,
) -> Result<f64> {
    let mut x_aug = DMatrix::zeros(train.len(), inputs.x.ncols() + 1);
    for (row, &i) in train.iter().enumerate() {
        x_aug[(row, 0)] = inputs.d[i] as f64;
        for j in 0..inputs.x.ncols() {
            x_aug[(row, j + 1)] = inputs.x[(i, j)];
        }
    }
    let y_train = subvec(inputs.y, train);
    let grid = cfg.lambda_grid.clone().unwrap_or_else(|| default_lambda_grid(&x_aug));
    let loss = if inputs.binary_outcome { CvLoss::LogLoss } else { CvLoss::SquaredError };
    let result = cross_validate(
        &x_aug,
        &y_train,
        &grid,
        CvOptions::new(cfg.cv_folds, loss, derive_seed(rep_seed, stream::CV_FOLDS, 1)),
    )?;
    Ok(result.selected_lambda)
}

fn tune_propensity_lambda(
    inputs: &RepetitionInputs<'_>,
    train: &[usize],
    cfg: &DmlConfig,
    rep_seed: u64,
) -> Result<f64> {
    let x_train = rows(inputs.x, train);
    let d_train = DVector::from_iterator(train.len(), train.iter().map(|&i| inputs.d[i] as f64));
    let grid = cfg.lambda_grid.clone().unwrap_or_else(|| default_lambda_grid(&x_train));
    // Logistic ridge needs a strictly positive penalty.
    let grid: Vec<f64> = grid.into_iter().filter(|&l| l > 0.0).collect();
    if grid.is_empty() {
        return Err(Error::config("propensity penalty grid has no positive entries"));
    }
    let result = cross_validate(
        &x_train,
        &d_train,
        &grid,
        CvOptions::new(cfg.cv_folds, CvLoss::LogLoss, derive_seed(rep_seed, stream::CV_FOLDS, 2)),
    )?;
    Ok(result.selected_lambda)
}

pub(crate) struct RepetitionNuisances {
    pub interactive: Option<InteractiveNuisances>,
    pub partially_linear: Option<PartiallyLinearNuisances>,
    pub clip: ClipStats,
    pub outcome_lambda: f64,
    pub propensity_lambda: f64,
}

/// Fit cross-fitted nuisances for one repetition of either model.
pub(crate) fn fit_repetition(
    inputs: &RepetitionInputs<'_>,
    cfg: &DmlConfig,
    rep_seed: u64,
    interactive: bool,
) -> Result<RepetitionNuisances> {
    let n = inputs.y.len();
    let assignment = workable_folds(inputs.d, cfg.folds, rep_seed)?;

    let train0: Vec<usize> = (0..n).filter(|&i| assignment[i] != 0).collect();
    let outcome_lambda = tune_outcome_lambda(inputs, &train0, cfg, rep_seed)?;
    let propensity_lambda = tune_propensity_lambda(inputs, &train0, cfg, rep_seed)?;
    // Ridge with λ = 0 on near-collinear designs is fragile; the outcome
    // learner also accepts 0 only on full-rank designs, so floor it.
    let outcome_lambda = outcome_lambda.max(1e-10);

    let mut g1 = vec![0.0; n];
    let mut g0 = vec![0.0; n];
    let mut ell = vec![0.0; n];
    let mut m_hat = vec![0.0; n];
    let mut clipped = 0usize;

    for k in 0..cfg.folds {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
        if test.is_empty() {
            continue;
        }
        let x_test = rows(inputs.x, &test);

        // Propensity.
        let x_train = rows(inputs.x, &train);
        let d_train =
            DVector::from_iterator(train.len(), train.iter().map(|&i| inputs.d[i] as f64));
        let prop_solver = LogisticRidgeSolver::new(&x_train, FitOptions::default())?;
        let prop_fit = prop_solver.fit(&d_train, propensity_lambda)?;
        let probs = prop_fit.predict_proba(&x_test);
        for (row, &i) in test.iter().enumerate() {
            let raw = probs[row];
            let clip = raw.clamp(cfg.clip, 1.0 - cfg.clip);
            if raw != clip {
                clipped += 1;
            }
            m_hat[i] = clip;
        }

        if interactive {
            // Separate outcome regressions per arm.
            for arm in [1u8, 0u8] {
                let arm_train: Vec<usize> =
                    train.iter().copied().filter(|&i| inputs.d[i] == arm).collect();
                if arm_train.len() < 2 {
                    return Err(Error::estimation(format!(
                        "training fold {k} has fewer than 2 observations with d = {arm}"
                    )));
                }
                let x_arm = rows(inputs.x, &arm_train);
                let y_arm = subvec(inputs.y, &arm_train);
                let store: &mut Vec<f64> = if arm == 1 { &mut g1 } else { &mut g0 };
                if inputs.binary_outcome {
                    let ones = y_arm.iter().filter(|&&v| v == 1.0).count();
                    if ones == 0 || ones == arm_train.len() {
                        // One-class arm: the regression degenerates to the
                        // arm's empirical rate, kept inside (0, 1).
                        let rate = (ones as f64 / arm_train.len() as f64)
                            .clamp(cfg.clip, 1.0 - cfg.clip);
                        for &i in &test {
                            store[i] = rate;
                        }
                        continue;
                    }
                    let solver = LogisticRidgeSolver::new(&x_arm, FitOptions::default())?;
                    let fit = solver.fit(&y_arm, outcome_lambda.max(1e-8))?;
                    let preds = fit.predict_proba(&x_test);
                    for (row, &i) in test.iter().enumerate() {
                        store[i] = preds[row];
                    }
                } else {
                    let solver = RidgeSolver::new(&x_arm, FitOptions::default())?;
                    let fit = solver.fit(&y_arm, outcome_lambda)?;
                    let preds = fit.predict(&x_test);
                    for (row, &i) in test.iter().enumerate() {
                        store[i] = preds[row];
                    }
                }
            }
        } else {
            // Pooled conditional mean ℓ(x) = E[y | x].
            let y_train = subvec(inputs.y, &train);
            if inputs.binary_outcome {
                let solver = LogisticRidgeSolver::new(&x_train, FitOptions::default())?;
                let fit = solver.fit(&y_train, outcome_lambda.max(1e-8))?;
                let preds = fit.predict_proba(&x_test);
                for (row, &i) in test.iter().enumerate() {
                    ell[i] = preds[row];
                }
            } else {
                let solver = RidgeSolver::new(&x_train, FitOptions::default())?;
                let fit = solver.fit(&y_train, outcome_lambda)?;
                let preds = fit.predict(&x_test);
                for (row, &i) in test.iter().enumerate() {
                    ell[i] = preds[row];
                }
            }
        }
    }

    if clipped == n {
        return Err(Error::estimation(
            "every propensity prediction sits at the clip boundary: common support is violated",
        ));
    }

    Ok(RepetitionNuisances {
        interactive: interactive.then(|| InteractiveNuisances {
            g1,
            g0,
            propensity: m_hat.clone(),
        }),
        partially_linear: (!interactive)
            .then(|| PartiallyLinearNuisances { outcome: ell, propensity: m_hat }),
        clip: ClipStats { clipped, total: n },
        outcome_lambda,
        propensity_lambda,
    })
}

pub(crate) fn resolve_outcome_kind(kind: OutcomeKind, y: &[f64]) -> bool {
    match kind {
        OutcomeKind::Continuous => false,
        OutcomeKind::Binary => true,
        OutcomeKind::Auto => y.iter().all(|&v| v == 0.0 || v == 1.0),
    }
}
