//! Two-step polychoric correlation estimation.
//!
//! Step 1 fixes the thresholds of each ordinal item at the normal quantiles
//! of its marginal cumulative proportions. Step 2 maximizes the bivariate
//! normal contingency likelihood over the latent correlation ρ, one pair at
//! a time. Cell probabilities are evaluated by Gauss-Legendre quadrature of
//! the conditional-normal representation
//!
//! `P(a<X≤b, c<Y≤d) = ∫_a^b φ(x)·[Φ((d−ρx)/s) − Φ((c−ρx)/s)] dx`,  `s = √(1−ρ²)`.
//!
//! Estimates are clipped to ±0.999; a pair whose likelihood pushes against
//! the boundary (perfect concordance, empty off-diagonal patterns) is
//! reported at the clip with a flag rather than rejected.

use super::block::ItemBlock;
use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_pdf, norm_quantile};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::BTreeMap;

pub const RHO_CLIP: f64 = 0.999;
const TAIL: f64 = 8.5;

// 24-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
const GL24_X: [f64; 12] = [
    0.064056892862605626,
    0.191118867473616309,
    0.315042679696163374,
    0.433793507626045138,
    0.545421471388839535,
    0.648093651936975569,
    0.740124191578554364,
    0.820001985973902921,
    0.886415527004401034,
    0.938274552002732758,
    0.974728555971309498,
    0.995187219997021360,
];
const GL24_W: [f64; 12] = [
    0.127938195346752156,
    0.125837456346828296,
    0.121670472927803391,
    0.115505668053725601,
    0.107444270115965634,
    0.097618652104113888,
    0.086190161531953275,
    0.073346481411080305,
    0.059298584915436780,
    0.044277438817419806,
    0.028531388628933663,
    0.012341229799987199,
];

/// Interior thresholds from observed marginal proportions, plus the sorted
/// observed category values.
pub fn estimate_thresholds(values: &[i8]) -> Result<(Vec<f64>, Vec<i8>)> {
    let n = values.len();
    if n == 0 {
        return Err(Error::validation("no observations for thresholds"));
    }
    let mut counts: BTreeMap<i8, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    if counts.len() < 2 {
        return Err(Error::validation("item has fewer than 2 observed categories"));
    }
    let categories: Vec<i8> = counts.keys().copied().collect();
    let mut thresholds = Vec::with_capacity(categories.len() - 1);
    let mut cum = 0usize;
    for cat in &categories[..categories.len() - 1] {
        cum += counts[cat];
        thresholds.push(norm_quantile(cum as f64 / n as f64)?);
    }
    Ok((thresholds, categories))
}

/// `P(a < X ≤ b, c < Y ≤ d)` under a standard bivariate normal with
/// correlation `rho`.
fn cell_probability(a: f64, b: f64, c: f64, d: f64, rho: f64) -> f64 {
    let lo = a.max(-TAIL);
    let hi = b.min(TAIL);
    if lo >= hi {
        return 0.0;
    }
    let s = (1.0 - rho * rho).sqrt().max(1e-12);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut total = 0.0;
    for k in 0..12 {
        for sign in [-1.0, 1.0] {
            let x = mid + sign * half * GL24_X[k];
            let upper = norm_cdf((d.min(TAIL) - rho * x) / s);
            let lower = norm_cdf((c.max(-TAIL) - rho * x) / s);
            total += GL24_W[k] * norm_pdf(x) * (upper - lower);
        }
    }
    (total * half).max(0.0)
}

/// Contingency log-likelihood of `rho` given cell counts and thresholds.
pub fn contingency_log_likelihood(
    counts: &DMatrix<f64>,
    tau_x: &[f64],
    tau_y: &[f64],
    rho: f64,
) -> f64 {
    let nx = counts.nrows();
    let ny = counts.ncols();
    let mut ll = 0.0;
    for r in 0..nx {
        let a = if r == 0 { f64::NEG_INFINITY } else { tau_x[r - 1] };
        let b = if r == nx - 1 { f64::INFINITY } else { tau_x[r] };
        for s in 0..ny {
            if counts[(r, s)] == 0.0 {
                continue;
            }
            let c = if s == 0 { f64::NEG_INFINITY } else { tau_y[s - 1] };
            let d = if s == ny - 1 { f64::INFINITY } else { tau_y[s] };
            let p = cell_probability(a, b, c, d, rho).max(1e-300);
            ll += counts[(r, s)] * p.ln();
        }
    }
    ll
}

#[derive(Debug, Clone, Copy)]
pub struct PolychoricEstimate {
    pub rho: f64,
    /// Estimate sits at the ±0.999 clip.
    pub clipped: bool,
}

/// Pairwise polychoric correlation of two ordinal variables.
pub fn polychoric_pair(x: &[i8], y: &[i8]) -> Result<PolychoricEstimate> {
    if x.len() != y.len() {
        return Err(Error::validation("paired items have different lengths"));
    }
    let (tau_x, cats_x) = estimate_thresholds(x)?;
    let (tau_y, cats_y) = estimate_thresholds(y)?;
    let ix: BTreeMap<i8, usize> = cats_x.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let iy: BTreeMap<i8, usize> = cats_y.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut counts = DMatrix::zeros(cats_x.len(), cats_y.len());
    for (&a, &b) in x.iter().zip(y.iter()) {
        counts[(ix[&a], iy[&b])] += 1.0;
    }

    // Coarse scan to bracket the maximum, then golden-section refinement.
    let scan: Vec<f64> = (0..=40).map(|k| -0.995 + k as f64 * (1.99 / 40.0)).collect();
    let mut best_k = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for (k, &rho) in scan.iter().enumerate() {
        let ll = contingency_log_likelihood(&counts, &tau_x, &tau_y, rho);
        if ll > best_ll {
            best_ll = ll;
            best_k = k;
        }
    }
    let lo = if best_k == 0 { -RHO_CLIP } else { scan[best_k - 1] };
    let hi = if best_k == scan.len() - 1 { RHO_CLIP } else { scan[best_k + 1] };

    let golden = 0.5 * (3.0 - 5.0f64.sqrt());
    let (mut a, mut b) = (lo, hi);
    let mut x1 = a + golden * (b - a);
    let mut x2 = b - golden * (b - a);
    let mut f1 = contingency_log_likelihood(&counts, &tau_x, &tau_y, x1);
    let mut f2 = contingency_log_likelihood(&counts, &tau_x, &tau_y, x2);
    while b - a > 1e-7 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - golden * (b - a);
            f2 = contingency_log_likelihood(&counts, &tau_x, &tau_y, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + golden * (b - a);
            f1 = contingency_log_likelihood(&counts, &tau_x, &tau_y, x1);
        }
    }
    let mut rho_hat = 0.5 * (a + b);
    let clipped = rho_hat.abs() >= RHO_CLIP - 1e-6;
    if clipped {
        rho_hat = RHO_CLIP.copysign(rho_hat);
    }
    Ok(PolychoricEstimate { rho: rho_hat, clipped })
}

#[derive(Debug, Clone)]
pub struct PolychoricMatrix {
    pub matrix: DMatrix<f64>,
    /// Pairs (i, j), i < j, whose estimate was clipped at the boundary.
    pub boundary_pairs: Vec<(usize, usize)>,
}

/// Pairwise polychoric correlation matrix of an item block.
pub fn polychoric_matrix(block: &ItemBlock) -> Result<PolychoricMatrix> {
    let q = block.q();
    let data = block.matrix();
    let columns: Vec<Vec<i8>> = (0..q)
        .map(|j| data.column(j).iter().map(|&v| v as i8).collect())
        .collect();
    // Validate that the stored block is integer-coded.
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if (data[(i, j)] - v as f64).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "item '{}' holds non-integer values; polychoric needs ordinal data",
                    block.items()[j]
                )));
            }
        }
    }

    let pairs: Vec<(usize, usize)> =
        (0..q).flat_map(|a| ((a + 1)..q).map(move |b| (a, b))).collect();
    let estimates: Vec<Result<PolychoricEstimate>> = pairs
        .par_iter()
        .map(|&(a, b)| polychoric_pair(&columns[a], &columns[b]))
        .collect();

    let mut matrix = DMatrix::identity(q, q);
    let mut boundary = Vec::new();
    for (&(a, b), est) in pairs.iter().zip(estimates) {
        let est = est?;
        matrix[(a, b)] = est.rho;
        matrix[(b, a)] = est.rho;
        if est.clipped {
            boundary.push((a, b));
        }
    }
    Ok(PolychoricMatrix { matrix, boundary_pairs: boundary })
}
