//! Maximum-correntropy measurement update. A Gaussian kernel scores each
//! weighted residual channel; channels hit by heavy-tailed outliers get
//! their noise covariance inflated, and a fixed-point iteration finds the
//! self-consistent gain. Wrapping the update around each point-set engine
//! yields the MC-UKF, MC-CKF and the square-root MC-PCKF.

use crate::filters::{
    mse_update, psd_sqrt, solve_gain, wrapped_residual, EngineKind, FilterError, SqrtBelief,
    R_FLOOR,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MccConfig {
    /// Kernel bandwidth in weighted-error space.
    pub sigma: f64,
    /// Relative-change stopping threshold.
    pub epsilon: f64,
    /// Iteration cap.
    pub i_max: usize,
    /// Minimum correntropy weight, guarding the covariance inflation.
    pub pi_floor: f64,
}

impl MccConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        MccConfig { sigma, epsilon: 1e-6, i_max: 20, pi_floor: 1e-12 }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if self.sigma > 0.0
            && self.epsilon > 0.0
            && self.i_max >= 1
            && self.pi_floor > 0.0
            && self.pi_floor <= 1.0
        {
            Ok(())
        } else {
            Err(FilterError::InvalidSpread(self.sigma))
        }
    }
}

/// Per-channel correntropy weights, split into the state and measurement
/// blocks of the augmented error vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrentropyWeights {
    pub pi_p: DVector<f64>,
    pub pi_r: DVector<f64>,
}

/// `exp(-e^2 / 2 sigma^2)`.
pub fn gaussian_kernel(e: f64, sigma: f64) -> f64 {
    (-e * e / (2.0 * sigma * sigma)).exp()
}

/// Augmented weighted error vector: the state block is the prior factor
/// solved against the candidate deviation (negated), the measurement
/// block the noise factor solved against the innovation at the
/// candidate. Angle channels are wrapped before weighting.
pub fn weighted_errors(
    x_candidate: &DVector<f64>,
    prior: &SqrtBelief,
    y: &DVector<f64>,
    y_pred_at_candidate: &DVector<f64>,
    s_r: &DMatrix<f64>,
    angular: &[bool],
) -> Result<DVector<f64>, FilterError> {
    let n = prior.dim();
    let m = y.len();
    let dx = x_candidate - &prior.mean;
    // A clamped factor can carry an exactly zero pivot in a direction the
    // prior holds with certainty. Flooring the pivot keeps the solve
    // defined; any deviation along that direction then scores a huge
    // weighted error and the kernel drives its weight to the floor.
    let mut s_p = prior.sqrt.clone();
    let pivot_floor = s_p
        .diagonal()
        .amax()
        .max(f64::MIN_POSITIVE)
        * f64::EPSILON;
    for i in 0..n {
        if s_p[(i, i)].abs() < pivot_floor {
            s_p[(i, i)] = pivot_floor;
        }
    }
    let e_p = s_p
        .solve_lower_triangular(&dx)
        .ok_or(FilterError::NonPositiveInnovation)?;
    let dy = wrapped_residual(y, y_pred_at_candidate, angular);
    let e_r = s_r
        .clone()
        .solve_lower_triangular(&dy)
        .ok_or(FilterError::NonPositiveInnovation)?;
    let mut out = DVector::zeros(n + m);
    out.rows_mut(0, n).copy_from(&(-e_p));
    out.rows_mut(n, m).copy_from(&e_r);
    Ok(out)
}

/// Kernel value of every error channel, floored at `pi_floor`.
pub fn correntropy_weights(errors: &DVector<f64>, n: usize, cfg: &MccConfig) -> CorrentropyWeights {
    let k = |e: &f64| gaussian_kernel(*e, cfg.sigma).max(cfg.pi_floor);
    let m = errors.len() - n;
    CorrentropyWeights {
        pi_p: DVector::from_iterator(n, errors.rows(0, n).iter().map(k)),
        pi_r: DVector::from_iterator(m, errors.rows(n, m).iter().map(k)),
    }
}

/// Inflate the factors by the inverse weights: `S_bar = S diag(pi^-1/2)`
/// so `S_bar S_bar^T = S Pi^-1 S^T` without densification.
pub fn modified_sqrt_factors(
    s_prior: &DMatrix<f64>,
    s_r: &DMatrix<f64>,
    w: &CorrentropyWeights,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let scale = |s: &DMatrix<f64>, pi: &DVector<f64>| {
        let mut out = s.clone();
        for (j, p) in pi.iter().enumerate() {
            let f = 1.0 / p.sqrt();
            for i in 0..out.nrows() {
                out[(i, j)] *= f;
            }
        }
        out
    };
    (scale(s_prior, &w.pi_p), scale(s_r, &w.pi_r))
}

/// Result of a maximum-correntropy update. Non-convergence is reported,
/// not fatal: the last iterate is returned.
#[derive(Debug, Clone)]
pub struct MccOutcome {
    pub belief: SqrtBelief,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximum-correntropy measurement update around a point-set engine.
///
/// The measurement statistics are taken once from the unmodified prior
/// and held fixed; the fixed-point iteration starts at the engine's
/// standard posterior mean and re-scores only the measurement noise each
/// pass.
#[allow(clippy::too_many_arguments)]
pub fn mc_update(
    prior: &SqrtBelief,
    engine: &EngineKind,
    h: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    y: &DVector<f64>,
    r_diag: &DVector<f64>,
    angular: &[bool],
    cfg: &MccConfig,
) -> Result<MccOutcome, FilterError> {
    cfg.validate()?;
    let n = prior.dim();
    let m = y.len();
    let stats = engine.measurement_stats(prior, h, m)?;
    let r_floored = DVector::from_iterator(m, r_diag.iter().map(|r| r.max(R_FLOOR)));
    let s_r = DMatrix::from_diagonal(&r_floored.map(|r| r.sqrt()));
    let innovation = wrapped_residual(y, &stats.y_pred, angular);

    // Engine's own mean-square posterior as the starting iterate.
    let mut x = mse_update(prior, &stats, r_diag, y, angular)?.mean;
    let mut gain = DMatrix::zeros(n, m);
    let mut pyy = stats.pyy_base.clone() + DMatrix::from_diagonal(&r_floored);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.i_max {
        iterations += 1;
        let errors = weighted_errors(&x, prior, y, &h(&x), &s_r, angular)?;
        let w = correntropy_weights(&errors, n, cfg);
        let (_, s_r_bar) = modified_sqrt_factors(&prior.sqrt, &s_r, &w);
        pyy = stats.pyy_base.clone() + &s_r_bar * s_r_bar.transpose();
        gain = solve_gain(&stats.pxy, &pyy)?;
        let x_next = &prior.mean + &gain * &innovation;
        let rel = (&x_next - &x).norm() / x.norm().max(1e-300);
        x = x_next;
        if rel <= cfg.epsilon {
            converged = true;
            break;
        }
    }
    let cov = prior.cov() - &gain * &pyy * gain.transpose();
    Ok(MccOutcome {
        belief: SqrtBelief::new(x, psd_sqrt(&cov)),
        iterations,
        converged,
    })
}
