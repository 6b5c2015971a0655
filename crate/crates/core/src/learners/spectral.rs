//! Thin singular value decomposition with validity checks.
//!
//! Both penalized learners in this module are expressed through the SVD
//! `X = U Σ Vᵀ`: ridge damps the coordinates of `y` in the `U` basis by
//! `σ_j² / (σ_j² + λ)` while principal component regression truncates them.
//! Computing the decomposition once therefore prices out an entire λ grid or
//! component path at marginal cost.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Thin SVD of an n × p matrix with singular values in descending order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decompose `x`. Fails only if the underlying iteration does not converge.
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let svd = x.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::estimation("SVD did not produce U"))?;
        let v_t = svd.v_t.ok_or_else(|| Error::estimation("SVD did not produce V"))?;
        Ok(Self { u, singular_values: svd.singular_values, v: v_t.transpose() })
    }

    /// Left singular vectors, n × r.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Right singular vectors, p × r.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Singular values σ_1 ≥ … ≥ σ_r ≥ 0.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Numerical rank: count of singular values above `max(n,p) · eps · σ_1`.
    pub fn rank(&self) -> usize {
        let tol = self.rank_tolerance();
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }

    pub fn rank_tolerance(&self) -> f64 {
        let dim = self.u.nrows().max(self.v.nrows()) as f64;
        let s_max = self.singular_values.get(0).copied().unwrap_or(0.0);
        dim * f64::EPSILON * s_max
    }

    /// Uᵀy, the coordinates of `y` in the left singular basis.
    pub fn u_coordinates(&self, y: &DVector<f64>) -> DVector<f64> {
        self.u.transpose() * y
    }

    /// Largest deviation of UᵀU and VᵀV from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let eu = (self.u.transpose() * &self.u - DMatrix::identity(self.u.ncols(), self.u.ncols()))
            .abs()
            .max();
        let ev = (self.v.transpose() * &self.v - DMatrix::identity(self.v.ncols(), self.v.ncols()))
            .abs()
            .max();
        eu.max(ev)
    }

    /// Relative Frobenius reconstruction error ‖X − UΣVᵀ‖_F / ‖X‖_F.
    pub fn reconstruction_error(&self, x: &DMatrix<f64>) -> f64 {
        let sigma = DMatrix::from_diagonal(&self.singular_values);
        let rebuilt = &self.u * sigma * self.v.transpose();
        let denom = x.norm();
        if denom == 0.0 {
            (x - rebuilt).norm()
        } else {
            (x - rebuilt).norm() / denom
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn singular_values_descend_and_bases_are_orthonormal() {
        let x = random_matrix(30, 6, 1);
        let dec = SpectralDecomposition::new(&x).unwrap();
        let s = dec.singular_values();
        for j in 1..s.len() {
            assert!(s[j - 1] >= s[j]);
        }
        assert!(dec.orthonormality_error() < 1e-10);
        assert!(dec.reconstruction_error(&x) < 1e-10);
    }

    #[test]
    fn rank_detects_duplicated_column() {
        let mut x = random_matrix(20, 4, 2);
        let dup = x.column(0).into_owned();
        x.set_column(3, &dup);
        let dec = SpectralDecomposition::new(&x).unwrap();
        assert_eq!(dec.rank(), 3);
    }
}
