//! Second-order Hermite polynomial chaos machinery: the basis matrix
//! evaluated at the collocation points and coefficient fitting by linear
//! solve.
//!
//! Cross terms of the expansion are truncated, leaving `2n + 1`
//! coefficients per output dimension. Two normalizations ship: the
//! literal unnormalized `H2(x) = x^2 - 1`, and an orthonormal mode with
//! `H2` divided by `sqrt(2)` so coefficient outer products reproduce
//! variances exactly.

use super::FilterError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BasisMode {
    /// `H2` as printed, second moment 2.
    #[serde(rename = "paper")]
    PaperLiteral,
    /// `H2 / sqrt(2)`, unit second moment.
    #[default]
    #[serde(rename = "orthonormal")]
    Orthonormal,
}

pub fn hermite_h1(x: f64) -> f64 {
    x
}

pub fn hermite_h2(x: f64, mode: BasisMode) -> f64 {
    match mode {
        BasisMode::PaperLiteral => x * x - 1.0,
        BasisMode::Orthonormal => (x * x - 1.0) / 2.0_f64.sqrt(),
    }
}

/// Hermite basis evaluated at a collocation set. Row `0` is all ones,
/// rows `1..=n` the `H1` block, rows `n+1..=2n` the `H2` block; columns
/// index collocation points.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub matrix: DMatrix<f64>,
    pub mode: BasisMode,
}

pub fn hermite_basis(xi: &DMatrix<f64>, mode: BasisMode) -> Result<HermiteBasis, FilterError> {
    let n = xi.nrows();
    let cols = xi.ncols();
    let mut m = DMatrix::zeros(2 * n + 1, cols);
    for j in 0..cols {
        m[(0, j)] = 1.0;
        for i in 0..n {
            m[(1 + i, j)] = hermite_h1(xi[(i, j)]);
            m[(1 + n + i, j)] = hermite_h2(xi[(i, j)], mode);
        }
    }
    if m.is_square() && m.clone().lu().determinant().abs() < 1e-12 {
        return Err(FilterError::SingularBasis);
    }
    Ok(HermiteBasis { matrix: m, mode })
}

/// PCE coefficients of a vector function: column `0` is the constant
/// term, columns `1..` the `H1` and `H2` coefficients.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    pub a: DMatrix<f64>,
}

impl CoefficientMatrix {
    /// Constant coefficient `a0`: the function mean in the basis sense.
    pub fn mean(&self) -> nalgebra::DVector<f64> {
        self.a.column(0).into_owned()
    }

    /// Coefficient columns without `a0`, `d x 2n`.
    pub fn spread(&self) -> DMatrix<f64> {
        self.a.columns(1, self.a.ncols() - 1).into_owned()
    }
}

/// Fit `A` such that `A * basis = values` by LU solve; `values` is
/// `d x (2n+1)` with one column per collocation point.
pub fn fit_coefficients(
    values: &DMatrix<f64>,
    basis: &HermiteBasis,
) -> Result<CoefficientMatrix, FilterError> {
    // basis^T * A^T = values^T
    let lu = basis.matrix.transpose().lu();
    let a_t = lu
        .solve(&values.transpose())
        .ok_or(FilterError::SingularBasis)?;
    Ok(CoefficientMatrix { a: a_t.transpose() })
}
