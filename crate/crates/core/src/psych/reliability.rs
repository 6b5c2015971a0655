//! Internal-consistency reliability: Cronbach's α with a Feldt confidence
//! interval, the standardized α, and corrected item-total correlations.

use crate::error::{Error, Result};
use crate::stats::pearson;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[derive(Debug, Clone)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// 95% Feldt interval (F distribution with n−1 and (n−1)(q−1) df).
    pub ci: (f64, f64),
    pub n: usize,
    pub q: usize,
}

/// Cronbach's α from a data matrix (rows = observations).
///
/// `α = q/(q−1) · (1 − Σ var(item) / var(total))`
pub fn cronbach_alpha(data: &DMatrix<f64>) -> Result<AlphaEstimate> {
    let n = data.nrows();
    let q = data.ncols();
    if q < 2 {
        return Err(Error::validation("alpha needs at least 2 items"));
    }
    if n < 3 {
        return Err(Error::validation("alpha needs at least 3 observations"));
    }
    let mut item_var_sum = 0.0;
    for j in 0..q {
        let col = data.column(j);
        let m = col.sum() / n as f64;
        item_var_sum += col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    }
    let totals: Vec<f64> = (0..n).map(|i| data.row(i).sum()).collect();
    let tm = totals.iter().sum::<f64>() / n as f64;
    let total_var = totals.iter().map(|v| (v - tm).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    if total_var <= 0.0 {
        return Err(Error::estimation("total score has zero variance"));
    }
    let alpha = q as f64 / (q as f64 - 1.0) * (1.0 - item_var_sum / total_var);

    // Feldt: (1−α̂)/(1−α) ~ F(n−1, (n−1)(q−1)).
    let df1 = (n - 1) as f64;
    let df2 = ((n - 1) * (q - 1)) as f64;
    let f = FisherSnedecor::new(df1, df2)
        .map_err(|e| Error::estimation(format!("F distribution: {e}")))?;
    let f_lo = f.inverse_cdf(0.025);
    let f_hi = f.inverse_cdf(0.975);
    let ci = (1.0 - (1.0 - alpha) / f_lo, 1.0 - (1.0 - alpha) / f_hi);

    Ok(AlphaEstimate { alpha, ci, n, q })
}

/// Standardized α: computed from the mean inter-item correlation,
/// `q·r̄ / (1 + (q−1)·r̄)`.
pub fn standardized_alpha(data: &DMatrix<f64>) -> Result<f64> {
    let q = data.ncols();
    if q < 2 {
        return Err(Error::validation("alpha needs at least 2 items"));
    }
    let mut sum_r = 0.0;
    let mut pairs = 0usize;
    for a in 0..q {
        for b in (a + 1)..q {
            let ca: Vec<f64> = data.column(a).iter().copied().collect();
            let cb: Vec<f64> = data.column(b).iter().copied().collect();
            match pearson(&ca, &cb) {
                Some(r) => {
                    sum_r += r;
                    pairs += 1;
                }
                None => {
                    return Err(Error::estimation("constant item in standardized alpha"));
                }
            }
        }
    }
    let r_bar = sum_r / pairs as f64;
    Ok(q as f64 * r_bar / (1.0 + (q as f64 - 1.0) * r_bar))
}

/// Correlation of each item with the sum of the remaining items.
/// Constant items yield `None`.
pub fn item_total_correlations(data: &DMatrix<f64>) -> Result<Vec<Option<f64>>> {
    let n = data.nrows();
    let q = data.ncols();
    if q < 2 {
        return Err(Error::validation("item-total correlations need at least 2 items"));
    }
    let totals: Vec<f64> = (0..n).map(|i| data.row(i).sum()).collect();
    let mut out = Vec::with_capacity(q);
    for j in 0..q {
        let item: Vec<f64> = data.column(j).iter().copied().collect();
        let rest: Vec<f64> = (0..n).map(|i| totals[i] - item[i]).collect();
        out.push(pearson(&item, &rest));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Correlated standard normal pair with exact population correlation rho.
    fn bivariate(n: usize, rho: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = DMatrix::zeros(n, 2);
        for i in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            data[(i, 0)] = z1;
            data[(i, 1)] = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        }
        data
    }

    #[test]
    fn two_item_alpha_matches_spearman_brown() {
        // Population α for two standardized items at r = 0.5 is 2r/(1+r) = 2/3.
        let data = bivariate(10_000, 0.5, 1);
        let est = cronbach_alpha(&data).unwrap();
        assert_abs_diff_eq!(est.alpha, 2.0 / 3.0, epsilon = 0.01);
        assert!(est.ci.0 < est.alpha && est.alpha < est.ci.1);
    }

    #[test]
    fn equicorrelated_four_items_match_closed_form() {
        // Four items, pairwise r = 0.6, equal variances:
        // α = k·r̄/(1+(k−1)·r̄) = 2.4/2.8 = 0.857.
        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut data = DMatrix::zeros(n, 4);
        // Factor construction: x_j = sqrt(0.6) f + sqrt(0.4) e_j gives r = 0.6.
        for i in 0..n {
            let f: f64 = rng.sample(StandardNormal);
            for j in 0..4 {
                let e: f64 = rng.sample(StandardNormal);
                data[(i, j)] = 0.6f64.sqrt() * f + 0.4f64.sqrt() * e;
            }
        }
        let est = cronbach_alpha(&data).unwrap();
        assert_abs_diff_eq!(est.alpha, 0.857, epsilon = 0.01);
        let std = standardized_alpha(&data).unwrap();
        assert_abs_diff_eq!(std, 0.857, epsilon = 0.01);
    }

    #[test]
    fn independent_items_have_near_zero_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = DMatrix::from_fn(5000, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let est = cronbach_alpha(&data).unwrap();
        assert!(est.alpha.abs() < 0.05, "alpha = {}", est.alpha);
    }

    #[test]
    fn zero_total_variance_errors() {
        let data = DMatrix::from_fn(10, 2, |_, j| if j == 0 { 1.0 } else { -1.0 });
        assert!(cronbach_alpha(&data).is_err());
    }

    #[test]
    fn two_items_item_total_equals_their_correlation() {
        let data = bivariate(10_000, 0.5, 4);
        let its = item_total_correlations(&data).unwrap();
        let r = pearson(
            &data.column(0).iter().copied().collect::<Vec<_>>(),
            &data.column(1).iter().copied().collect::<Vec<_>>(),
        )
        .unwrap();
        assert_abs_diff_eq!(its[0].unwrap(), r, epsilon = 1e-12);
        assert_abs_diff_eq!(its[1].unwrap(), r, epsilon = 1e-12);
    }

    #[test]
    fn independent_item_has_near_zero_item_total() {
        let mut data = bivariate(5000, 0.8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let noise: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        data = data.insert_column(2, 0.0);
        for i in 0..5000 {
            data[(i, 2)] = noise[i];
        }
        let its = item_total_correlations(&data).unwrap();
        assert!(its[2].unwrap().abs() < 0.05);
    }

    #[test]
    fn duplicated_item_correlates_with_its_twin() {
        // Exact duplicate pair: the corrected item-total is the correlation
        // with the twin, which is 1.
        let base = bivariate(2000, 0.3, 7);
        let mut pair = DMatrix::zeros(2000, 2);
        for i in 0..2000 {
            pair[(i, 0)] = base[(i, 0)];
            pair[(i, 1)] = base[(i, 0)];
        }
        let its = item_total_correlations(&pair).unwrap();
        assert_abs_diff_eq!(its[0].unwrap(), 1.0, epsilon = 1e-12);

        // With a weakly related third item the twin still dominates the rest
        // score, so the duplicated items outrank it.
        let mut trio = DMatrix::zeros(2000, 3);
        for i in 0..2000 {
            trio[(i, 0)] = base[(i, 0)];
            trio[(i, 1)] = base[(i, 0)];
            trio[(i, 2)] = base[(i, 1)];
        }
        let its = item_total_correlations(&trio).unwrap();
        assert!(its[0].unwrap() > its[2].unwrap() + 0.2);
    }

    #[test]
    fn constant_item_reports_none() {
        let mut data = bivariate(100, 0.5, 8);
        data = data.insert_column(2, 1.5);
        let its = item_total_correlations(&data).unwrap();
        assert!(its[2].is_none());
    }
}
