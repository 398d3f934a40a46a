//! Square-root point-set Kalman filters.
//!
//! Three engines share one predict/update interface: the unscented
//! filter, the cubature filter and a second-order polynomial chaos
//! filter. All carry covariance as a lower-triangular factor.

pub mod engine;
pub mod pce;
pub mod points;
pub mod sqrt;

pub use engine::{
    mse_update, solve_gain, wrapped_residual, EngineKind, MeasurementStats, R_FLOOR,
};
pub use pce::{fit_coefficients, hermite_basis, BasisMode, CoefficientMatrix, HermiteBasis};
pub use points::{ckf_points, collocation_points, pce_points, ukf_points, WeightedPoints};
pub use sqrt::{psd_sqrt, qr_sqrt, SqrtBelief};

use thiserror::Error;

/// Failures raised by filter construction or a single step.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    /// `n + kappa` must be positive for the unscented point set.
    #[error("invalid sigma point spread n + kappa = {0}")]
    InvalidSpread(f64),
    /// The collocation basis matrix is numerically singular.
    #[error("singular polynomial chaos basis")]
    SingularBasis,
    /// The innovation covariance could not be solved against.
    #[error("innovation covariance is not positive definite")]
    NonPositiveInnovation,
}
