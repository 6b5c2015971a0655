//! Component retention criteria on correlation-matrix eigenvalues.
//!
//! Four rules are reported side by side: the Kaiser-Guttman count (> 1), the
//! Jolliffe count (> 0.7), the Empirical Kaiser Criterion with its
//! sample-size-adjusted reference series, and parallel analysis against
//! Monte Carlo eigenvalues of uncorrelated normal data.

use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct PaConfig {
    pub replications: usize,
    /// Reference percentile of the Monte Carlo eigenvalue distribution.
    pub percentile: f64,
    pub seed: u64,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self { replications: 1000, percentile: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct RetentionReport {
    pub eigenvalues: Vec<f64>,
    pub kaiser_guttman: usize,
    pub jolliffe: usize,
    pub empirical_kaiser: usize,
    pub parallel_analysis: usize,
    pub ekc_reference: Vec<f64>,
    pub pa_reference: Vec<f64>,
}

/// Descending eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// Eigenvalues of the sample correlation matrix of an n × q data matrix.
fn correlation_eigenvalues(data: &DMatrix<f64>) -> Vec<f64> {
    let n = data.nrows();
    let q = data.ncols();
    let mut std_data = data.clone();
    for j in 0..q {
        let col = data.column(j);
        let m = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        for i in 0..n {
            std_data[(i, j)] = (data[(i, j)] - m) / sd;
        }
    }
    let r = std_data.transpose() * &std_data / (n as f64 - 1.0);
    sorted_eigenvalues(&r)
}

/// EKC reference series:
/// `l_j^ref = max(((q − Σ_{i<j} l_i) / (q − j + 1)) · (1 + √(q/n))², 1)`.
fn ekc_reference(eigenvalues: &[f64], n: usize, q: usize) -> Vec<f64> {
    let inflation = (1.0 + (q as f64 / n as f64).sqrt()).powi(2);
    let mut refs = Vec::with_capacity(eigenvalues.len());
    let mut consumed = 0.0;
    for j in 0..eigenvalues.len() {
        let remaining = (q as f64 - consumed) / (q as f64 - j as f64);
        refs.push((remaining * inflation).max(1.0));
        consumed += eigenvalues[j];
    }
    refs
}

/// Count leading eigenvalues above their reference, stopping at the first
/// failure.
fn sequential_count(eigenvalues: &[f64], reference: &[f64]) -> usize {
    eigenvalues
        .iter()
        .zip(reference.iter())
        .take_while(|(l, r)| l > r)
        .count()
}

/// Monte Carlo eigenvalue percentiles for uncorrelated normal data.
pub fn parallel_analysis_reference(n: usize, q: usize, config: &PaConfig) -> Result<Vec<f64>> {
    if config.replications == 0 {
        return Err(Error::validation("parallel analysis needs at least 1 replication"));
    }
    if !(0.0..=1.0).contains(&config.percentile) {
        return Err(Error::validation("percentile must lie in [0, 1]"));
    }
    let reps: Vec<Vec<f64>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                stream::PARALLEL_ANALYSIS,
                r as u64,
            ));
            let data = DMatrix::from_fn(n, q, |_, _| rng.sample(StandardNormal));
            correlation_eigenvalues(&data)
        })
        .collect();

    // Per-position order statistic at the configured percentile.
    let idx = ((config.percentile * config.replications as f64).ceil() as usize)
        .clamp(1, config.replications)
        - 1;
    let mut reference = Vec::with_capacity(q);
    for j in 0..q {
        let mut column: Vec<f64> = reps.iter().map(|ev| ev[j]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        reference.push(column[idx]);
    }
    Ok(reference)
}

/// Apply all four retention criteria to a descending eigenvalue sequence
/// from a q-variable correlation matrix estimated on n observations.
pub fn retention_criteria(
    eigenvalues: &[f64],
    n: usize,
    q: usize,
    pa: &PaConfig,
) -> Result<RetentionReport> {
    if eigenvalues.is_empty() {
        return Err(Error::validation("empty eigenvalue sequence"));
    }
    for w in eigenvalues.windows(2) {
        if w[1] > w[0] + 1e-10 {
            return Err(Error::validation("eigenvalues must be sorted descending"));
        }
    }
    let kaiser_guttman = eigenvalues.iter().filter(|&&l| l > 1.0).count();
    let jolliffe = eigenvalues.iter().filter(|&&l| l > 0.7).count();
    let ekc_ref = ekc_reference(eigenvalues, n, q);
    let empirical_kaiser = sequential_count(eigenvalues, &ekc_ref);
    let pa_ref = parallel_analysis_reference(n, q, pa)?;
    let parallel_analysis = sequential_count(eigenvalues, &pa_ref);

    Ok(RetentionReport {
        eigenvalues: eigenvalues.to_vec(),
        kaiser_guttman,
        jolliffe,
        empirical_kaiser,
        parallel_analysis,
        ekc_reference: ekc_ref,
        pa_reference: pa_ref,
    })
}
