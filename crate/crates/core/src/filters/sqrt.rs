//! QR-based square-root factors. Covariances are carried as lower
//! triangular factors `S` with `P = S S^T`; explicit Cholesky of possibly
//! indefinite matrices is never performed.

use nalgebra::{DMatrix, DVector};

/// Lower-triangular square root of `U U^T` via QR of `U^T`, with the
/// diagonal sign-normalized to be non-negative. `U` is `n x p`, `p >= n`.
/// Rank-deficient inputs yield zero rows, which is permitted.
pub fn qr_sqrt(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let qr = u.transpose().qr();
    let r = qr.r();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n.min(r.nrows()) {
        for j in i..n {
            s[(j, i)] = r[(i, j)];
        }
    }
    // Flip columns so the diagonal is non-negative.
    for i in 0..n {
        if s[(i, i)] < 0.0 {
            for j in 0..n {
                s[(j, i)] = -s[(j, i)];
            }
        }
    }
    s
}

/// Lower-triangular factor of a symmetric matrix that may have lost
/// positive semi-definiteness to rounding: negative eigenvalues are
/// clamped to zero before factoring.
pub fn psd_sqrt(p: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = p.nrows();
    let mut u = DMatrix::zeros(n, n);
    for j in 0..n {
        let lambda = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            u[(i, j)] = eig.eigenvectors[(i, j)] * lambda;
        }
    }
    qr_sqrt(&u)
}

/// State mean plus lower-triangular covariance factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtBelief {
    pub mean: DVector<f64>,
    pub sqrt: DMatrix<f64>,
}

impl SqrtBelief {
    pub fn new(mean: DVector<f64>, sqrt: DMatrix<f64>) -> Self {
        assert_eq!(mean.len(), sqrt.nrows());
        assert_eq!(sqrt.nrows(), sqrt.ncols());
        SqrtBelief { mean, sqrt }
    }

    /// Build from a dense covariance.
    pub fn from_cov(mean: DVector<f64>, cov: &DMatrix<f64>) -> Self {
        let sqrt = psd_sqrt(cov);
        SqrtBelief { mean, sqrt }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self) -> DMatrix<f64> {
        &self.sqrt * self.sqrt.transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.sqrt.iter().all(|v| v.is_finite())
    }
}
