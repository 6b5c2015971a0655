//! Sampling adequacy for dimension reduction: KMO, Bartlett's sphericity
//! test, and the determinant of the correlation matrix.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone)]
pub struct AdequacyReport {
    pub kmo: f64,
    pub bartlett_chi_square: f64,
    pub bartlett_df: usize,
    pub bartlett_p: f64,
    pub determinant: f64,
    /// The matrix was singular; KMO used a pseudo-inverse.
    pub singular: bool,
}

fn validate_correlation(r: &DMatrix<f64>) -> Result<usize> {
    let q = r.nrows();
    if q < 2 || r.ncols() != q {
        return Err(Error::validation("correlation matrix must be square with q >= 2"));
    }
    for i in 0..q {
        if (r[(i, i)] - 1.0).abs() > 1e-8 {
            return Err(Error::validation("correlation matrix must have unit diagonal"));
        }
        for j in 0..q {
            if (r[(i, j)] - r[(j, i)]).abs() > 1e-8 {
                return Err(Error::validation("correlation matrix must be symmetric"));
            }
        }
    }
    Ok(q)
}

/// KMO, Bartlett, and determinant for a correlation matrix estimated on `n`
/// observations.
pub fn sampling_adequacy(r: &DMatrix<f64>, n: usize) -> Result<AdequacyReport> {
    let q = validate_correlation(r)?;
    if n < 2 {
        return Err(Error::validation("need at least 2 observations"));
    }

    let eigen = r.clone().symmetric_eigen();
    let determinant: f64 = eigen.eigenvalues.iter().product();
    let tol = 1e-10 * eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max).max(1.0);
    let singular = eigen.eigenvalues.iter().any(|&l| l < tol);

    // Inverse (or eigenvalue-truncated pseudo-inverse when singular).
    let inv = {
        let mut d = DMatrix::zeros(q, q);
        for k in 0..q {
            let l = eigen.eigenvalues[k];
            d[(k, k)] = if l > tol { 1.0 / l } else { 0.0 };
        }
        &eigen.eigenvectors * d * eigen.eigenvectors.transpose()
    };

    // Anti-image partial correlations q_ij = −inv_ij / √(inv_ii · inv_jj).
    let mut r2_sum = 0.0;
    let mut q2_sum = 0.0;
    for i in 0..q {
        for j in 0..q {
            if i == j {
                continue;
            }
            r2_sum += r[(i, j)] * r[(i, j)];
            let denom = (inv[(i, i)] * inv[(j, j)]).sqrt();
            let partial = if denom > 0.0 { -inv[(i, j)] / denom } else { 0.0 };
            q2_sum += partial * partial;
        }
    }
    let kmo = if r2_sum + q2_sum > 0.0 { r2_sum / (r2_sum + q2_sum) } else { f64::NAN };

    let det_reported = if singular { 0.0 } else { determinant };
    let bartlett_df = q * (q - 1) / 2;
    let (bartlett_chi_square, bartlett_p) = if det_reported > 0.0 {
        let stat = -((n as f64 - 1.0) - (2.0 * q as f64 + 5.0) / 6.0) * det_reported.ln();
        let stat = stat.max(0.0);
        let dist = ChiSquared::new(bartlett_df as f64)
            .map_err(|e| Error::estimation(format!("chi-square distribution: {e}")))?;
        (stat, 1.0 - dist.cdf(stat))
    } else {
        (f64::INFINITY, 0.0)
    };

    Ok(AdequacyReport {
        kmo,
        bartlett_chi_square,
        bartlett_df,
        bartlett_p,
        determinant: det_reported,
        singular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_matrix_is_perfectly_spherical() {
        let r = DMatrix::<f64>::identity(4, 4);
        let rep = sampling_adequacy(&r, 100).unwrap();
        assert_abs_diff_eq!(rep.bartlett_chi_square, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.bartlett_p, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.determinant, 1.0, epsilon = 1e-12);
        assert!(!rep.singular);
    }

    #[test]
    fn two_variable_kmo_is_one_half() {
        // With two variables the partial correlation equals the correlation,
        // so KMO = r²/(r² + r²) = 0.5 regardless of r.
        for r_val in [0.2, 0.5, 0.8] {
            let r = DMatrix::from_row_slice(2, 2, &[1.0, r_val, r_val, 1.0]);
            let rep = sampling_adequacy(&r, 50).unwrap();
            assert_abs_diff_eq!(rep.kmo, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn matches_brute_force_formula_evaluation() {
        // Random PD correlation matrix via a factor structure.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = 5;
        let loadings: Vec<f64> = (0..q).map(|_| rng.gen_range(0.3..0.8)).collect();
        let mut r = DMatrix::identity(q, q);
        for i in 0..q {
            for j in 0..q {
                if i != j {
                    r[(i, j)] = loadings[i] * loadings[j];
                }
            }
        }
        let n = 300;
        let rep = sampling_adequacy(&r, n).unwrap();

        // Oracle: direct inverse and elementwise accumulation.
        let inv = r.clone().try_inverse().unwrap();
        let mut r2 = 0.0;
        let mut q2 = 0.0;
        for i in 0..q {
            for j in 0..q {
                if i != j {
                    r2 += r[(i, j)].powi(2);
                    q2 += (-inv[(i, j)] / (inv[(i, i)] * inv[(j, j)]).sqrt()).powi(2);
                }
            }
        }
        assert_abs_diff_eq!(rep.kmo, r2 / (r2 + q2), epsilon = 1e-10);
        let det = r.determinant();
        assert_abs_diff_eq!(rep.determinant, det, epsilon = 1e-10);
        let expected_chi =
            -((n as f64 - 1.0) - (2.0 * q as f64 + 5.0) / 6.0) * det.ln();
        assert_abs_diff_eq!(rep.bartlett_chi_square, expected_chi, epsilon = 1e-8);
    }

    #[test]
    fn singular_matrix_reports_zero_determinant_with_flag() {
        // Duplicate variable makes the matrix exactly singular.
        let r = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1.0, 0.3, 1.0, 1.0, 0.3, 0.3, 0.3, 1.0],
        );
        let rep = sampling_adequacy(&r, 80).unwrap();
        assert!(rep.singular);
        assert_eq!(rep.determinant, 0.0);
        assert_eq!(rep.bartlett_p, 0.0);
        assert!(rep.kmo.is_finite());
    }
}
