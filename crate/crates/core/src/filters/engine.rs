//! Predict/update cycle for the three point-set filters: UKF, CKF and
//! the polynomial chaos Kalman filter, all in square-root form. The
//! measurement statistics produced here are also the fixed inputs of the
//! maximum-correntropy update.

use super::pce::{fit_coefficients, hermite_basis, BasisMode};
use super::points::{ckf_points, collocation_points, pce_points, ukf_points, WeightedPoints};
use super::sqrt::{psd_sqrt, qr_sqrt, SqrtBelief};
use super::FilterError;
use crate::geodesy::wrap_angle;
use nalgebra::{DMatrix, DVector};

/// Floor applied to measurement covariance diagonal entries.
pub const R_FLOOR: f64 = 1e-15;

/// Which deterministic point set drives the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineKind {
    Ukf { kappa: f64 },
    Ckf,
    Pckf { mode: BasisMode },
}

/// Measurement statistics computed once per step from the unmodified
/// prior: predicted measurement, the noiseless part of the innovation
/// covariance, and the state-measurement cross covariance.
#[derive(Debug, Clone)]
pub struct MeasurementStats {
    pub y_pred: DVector<f64>,
    pub pyy_base: DMatrix<f64>,
    pub pxy: DMatrix<f64>,
}

fn sigma_stats(
    prior: &SqrtBelief,
    pts: &WeightedPoints,
    h: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    m: usize,
) -> MeasurementStats {
    let n = prior.dim();
    let ys: Vec<DVector<f64>> = pts.points.iter().map(h).collect();
    let mut y_pred = DVector::zeros(m);
    for (y, w) in ys.iter().zip(&pts.weights) {
        y_pred += y * *w;
    }
    let mut pyy_base = DMatrix::zeros(m, m);
    let mut pxy = DMatrix::zeros(n, m);
    for ((x, y), w) in pts.points.iter().zip(&ys).zip(&pts.weights) {
        let dy = y - &y_pred;
        let dx = x - &prior.mean;
        pyy_base += *w * &dy * dy.transpose();
        pxy += *w * &dx * dy.transpose();
    }
    MeasurementStats { y_pred, pyy_base, pxy }
}

impl EngineKind {
    /// Time update: propagate the deterministic points through the
    /// process function and rebuild the square-root belief with the
    /// per-step process noise factor appended.
    pub fn predict(
        &self,
        belief: &SqrtBelief,
        f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
        sqrt_q: &DMatrix<f64>,
    ) -> Result<SqrtBelief, FilterError> {
        let n = belief.dim();
        match self {
            EngineKind::Pckf { mode } => {
                let points = pce_points(belief);
                let propagated: Vec<DVector<f64>> = points.iter().map(f).collect();
                let mut values = DMatrix::zeros(n, 2 * n + 1);
                for (j, p) in propagated.iter().enumerate() {
                    values.set_column(j, p);
                }
                let basis = hermite_basis(&collocation_points(n), *mode)?;
                let coeff = fit_coefficients(&values, &basis)?;
                let spread = coeff.spread();
                let mut stacked = DMatrix::zeros(n, spread.ncols() + sqrt_q.ncols());
                stacked.view_mut((0, 0), (n, spread.ncols())).copy_from(&spread);
                stacked
                    .view_mut((0, spread.ncols()), (n, sqrt_q.ncols()))
                    .copy_from(sqrt_q);
                Ok(SqrtBelief::new(coeff.mean(), qr_sqrt(&stacked)))
            }
            EngineKind::Ukf { kappa } => {
                let pts = ukf_points(belief, *kappa)?;
                Ok(sigma_predict(&pts, f, sqrt_q))
            }
            EngineKind::Ckf => {
                let pts = ckf_points(belief);
                Ok(sigma_predict(&pts, f, sqrt_q))
            }
        }
    }

    /// Measurement statistics from the unmodified prior.
    pub fn measurement_stats(
        &self,
        prior: &SqrtBelief,
        h: &dyn Fn(&DVector<f64>) -> DVector<f64>,
        m: usize,
    ) -> Result<MeasurementStats, FilterError> {
        let n = prior.dim();
        match self {
            EngineKind::Pckf { mode } => {
                let points = pce_points(prior);
                let mut yvals = DMatrix::zeros(m, 2 * n + 1);
                let mut xvals = DMatrix::zeros(n, 2 * n + 1);
                for (j, p) in points.iter().enumerate() {
                    yvals.set_column(j, &h(p));
                    xvals.set_column(j, p);
                }
                let basis = hermite_basis(&collocation_points(n), *mode)?;
                let b = fit_coefficients(&yvals, &basis)?;
                // PCE of the identity in the prior basis gives the
                // cross-covariance factor (analytically [S | 0]).
                let a = fit_coefficients(&xvals, &basis)?;
                let bs = b.spread();
                Ok(MeasurementStats {
                    y_pred: b.mean(),
                    pyy_base: &bs * bs.transpose(),
                    pxy: a.spread() * bs.transpose(),
                })
            }
            EngineKind::Ukf { kappa } => {
                let pts = ukf_points(prior, *kappa)?;
                Ok(sigma_stats(prior, &pts, h, m))
            }
            EngineKind::Ckf => {
                let pts = ckf_points(prior);
                Ok(sigma_stats(prior, &pts, h, m))
            }
        }
    }
}

fn sigma_predict(
    pts: &WeightedPoints,
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    sqrt_q: &DMatrix<f64>,
) -> SqrtBelief {
    let propagated: Vec<DVector<f64>> = pts.points.iter().map(f).collect();
    let n = propagated[0].len();
    let mut mean = DVector::zeros(n);
    for (p, w) in propagated.iter().zip(&pts.weights) {
        mean += p * *w;
    }
    if pts.weights.iter().all(|w| *w >= 0.0) {
        let k = propagated.len();
        let mut stacked = DMatrix::zeros(n, k + sqrt_q.ncols());
        for (j, (p, w)) in propagated.iter().zip(&pts.weights).enumerate() {
            stacked.set_column(j, &((p - &mean) * w.sqrt()));
        }
        stacked.view_mut((0, k), (n, sqrt_q.ncols())).copy_from(sqrt_q);
        SqrtBelief::new(mean, qr_sqrt(&stacked))
    } else {
        // A negative center weight (UKF with kappa < 0) rules out the
        // stacked QR form; fall back to the dense moment sum.
        let mut cov = sqrt_q * sqrt_q.transpose();
        for (p, w) in propagated.iter().zip(&pts.weights) {
            let d = p - &mean;
            cov += *w * &d * d.transpose();
        }
        SqrtBelief::from_cov(mean, &cov)
    }
}

/// Innovation with angle channels wrapped into `(-pi, pi]`.
pub fn wrapped_residual(y: &DVector<f64>, y_pred: &DVector<f64>, angular: &[bool]) -> DVector<f64> {
    DVector::from_iterator(
        y.len(),
        y.iter().zip(y_pred.iter()).enumerate().map(|(i, (a, b))| {
            let d = a - b;
            if angular.get(i).copied().unwrap_or(false) {
                wrap_angle(d)
            } else {
                d
            }
        }),
    )
}

/// Kalman gain `K = Pxy * Pyy^-1` by linear solve, never explicit
/// inversion. The innovation covariance is equilibrated by its diagonal
/// before factorization: reweighted updates mix rejected channels
/// (variance inflated by up to `1/pi_floor`) with accepted ones, and the
/// raw matrix can be too ill-conditioned for a direct factorization even
/// though the scaled one is benign.
pub fn solve_gain(pxy: &DMatrix<f64>, pyy: &DMatrix<f64>) -> Result<DMatrix<f64>, FilterError> {
    let sym = (pyy + pyy.transpose()) * 0.5;
    let m = sym.nrows();
    let d = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let v = sym[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        }),
    );
    let mut scaled = sym;
    for i in 0..m {
        for j in 0..m {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let mut rhs = pxy.transpose();
    for i in 0..m {
        rhs.row_mut(i).scale_mut(d[i]);
    }
    let solved = if let Some(chol) = scaled.clone().cholesky() {
        chol.solve(&rhs)
    } else {
        scaled
            .lu()
            .solve(&rhs)
            .ok_or(FilterError::NonPositiveInnovation)?
    };
    let mut kt = solved;
    for i in 0..m {
        kt.row_mut(i).scale_mut(d[i]);
    }
    Ok(kt.transpose())
}

/// Standard moment-matched (mean-square-error) measurement update.
pub fn mse_update(
    prior: &SqrtBelief,
    stats: &MeasurementStats,
    r_diag: &DVector<f64>,
    y: &DVector<f64>,
    angular: &[bool],
) -> Result<SqrtBelief, FilterError> {
    let m = r_diag.len();
    let mut pyy = stats.pyy_base.clone();
    for i in 0..m {
        pyy[(i, i)] += r_diag[i].max(R_FLOOR);
    }
    let gain = solve_gain(&stats.pxy, &pyy)?;
    let resid = wrapped_residual(y, &stats.y_pred, angular);
    let mean = &prior.mean + &gain * resid;
    let cov = prior.cov() - &gain * &pyy * gain.transpose();
    Ok(SqrtBelief::new(mean, psd_sqrt(&cov)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn engines() -> Vec<EngineKind> {
        vec![
            EngineKind::Ukf { kappa: 1.0 },
            EngineKind::Ckf,
            EngineKind::Pckf { mode: BasisMode::Orthonormal },
            EngineKind::Pckf { mode: BasisMode::PaperLiteral },
        ]
    }

    fn random_belief(n: usize, rng: &mut ChaCha12Rng) -> SqrtBelief {
        let mean = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let cov = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        SqrtBelief::from_cov(mean, &cov)
    }

    #[test]
    fn identity_process_preserves_belief() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let belief = random_belief(3, &mut rng);
        let sqrt_q = DMatrix::zeros(3, 3);
        for engine in engines() {
            let next = engine.predict(&belief, &|x| x.clone(), &sqrt_q).unwrap();
            assert!((&next.mean - &belief.mean).amax() < 1e-12);
            assert!((next.cov() - belief.cov()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn linear_predict_matches_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 4;
        let belief = random_belief(n, &mut rng);
        let f_mat = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let bias = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let q = DMatrix::from_diagonal(&DVector::from_element(n, 0.3));
        let sqrt_q = psd_sqrt(&q);
        let expected_mean = &f_mat * &belief.mean + &bias;
        let expected_cov = &f_mat * belief.cov() * f_mat.transpose() + &q;
        for engine in engines() {
            let next = engine
                .predict(&belief, &|x| &f_mat * x + &bias, &sqrt_q)
                .unwrap();
            assert!((&next.mean - &expected_mean).amax() < 1e-10, "{engine:?}");
            assert!((next.cov() - &expected_cov).abs().max() < 1e-10, "{engine:?}");
        }
    }

    #[test]
    fn pckf_square_moments_orthonormal() {
        // f(x) = x^2 of a standard normal: mean 1, variance 2.
        let belief = SqrtBelief::new(DVector::from_element(1, 0.0), DMatrix::identity(1, 1));
        let engine = EngineKind::Pckf { mode: BasisMode::Orthonormal };
        let next = engine
            .predict(&belief, &|x| DVector::from_element(1, x[0] * x[0]), &DMatrix::zeros(1, 1))
            .unwrap();
        assert_abs_diff_eq!(next.mean[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.cov()[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn pckf_additive_quadratic_exact() {
        // f(x) = c + Lx + sum_i q_i x_i^2 with Gaussian beliefs has
        // closed-form moments the orthonormal PCE must reproduce.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for n in [1usize, 3, 9] {
            let mean = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let sdiag = DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
            let belief = SqrtBelief::new(mean.clone(), DMatrix::from_diagonal(&sdiag));
            let c = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let l = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let q = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let f = |x: &DVector<f64>| {
                let mut out = &c + &l * x;
                for i in 0..n {
                    out[i] += q[i] * x[i] * x[i];
                }
                out
            };
            // Analytic moments: with x_i = m_i + s_i z, z standard normal,
            // q_i x_i^2 = q_i(m_i^2 + s_i^2) + 2 q_i m_i s_i z + q_i s_i^2 (z^2 - 1).
            let mut exp_mean = &c + &l * &mean;
            for i in 0..n {
                exp_mean[i] += q[i] * (mean[i] * mean[i] + sdiag[i] * sdiag[i]);
            }
            let mut lin = l.clone();
            for i in 0..n {
                lin[(i, i)] += 2.0 * q[i] * mean[i];
            }
            let s = DMatrix::from_diagonal(&sdiag);
            let g = &lin * &s; // coefficient on z
            let mut exp_cov = &g * g.transpose();
            for i in 0..n {
                for j in 0..n {
                    // Var[z^2 - 1] = 2 per axis, independent across axes.
                    if i == j {
                        exp_cov[(i, j)] += 2.0 * (q[i] * sdiag[i] * sdiag[i]).powi(2);
                    }
                }
            }
            let engine = EngineKind::Pckf { mode: BasisMode::Orthonormal };
            let next = engine.predict(&belief, &f, &DMatrix::zeros(n, n)).unwrap();
            assert!((&next.mean - &exp_mean).amax() < 1e-9, "n={n}");
            assert!((next.cov() - &exp_cov).abs().max() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn linear_update_matches_kalman() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 3;
        let m = 2;
        let prior = random_belief(n, &mut rng);
        let h_mat = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5);
        let r_diag = DVector::from_column_slice(&[0.2, 0.5]);
        let y = DVector::from_column_slice(&[0.7, -0.3]);
        // Directly coded Kalman update.
        let p = prior.cov();
        let pyy = &h_mat * &p * h_mat.transpose() + DMatrix::from_diagonal(&r_diag);
        let k = &p * h_mat.transpose() * pyy.clone().try_inverse().unwrap();
        let exp_mean = &prior.mean + &k * (&y - &h_mat * &prior.mean);
        let exp_cov = &p - &k * &pyy * k.transpose();
        for engine in [
            EngineKind::Ukf { kappa: 1.0 },
            EngineKind::Ckf,
            EngineKind::Pckf { mode: BasisMode::Orthonormal },
        ] {
            let stats = engine
                .measurement_stats(&prior, &|x| &h_mat * x, m)
                .unwrap();
            let post = mse_update(&prior, &stats, &r_diag, &y, &[false, false]).unwrap();
            assert!((&post.mean - &exp_mean).amax() < 1e-8, "{engine:?}");
            assert!((post.cov() - &exp_cov).abs().max() < 1e-8, "{engine:?}");
        }
    }

    #[test]
    fn huge_noise_keeps_prior() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let prior = random_belief(2, &mut rng);
        let engine = EngineKind::Ckf;
        let stats = engine
            .measurement_stats(&prior, &|x| x.rows(0, 1).into_owned(), 1)
            .unwrap();
        let post = mse_update(
            &prior,
            &stats,
            &DVector::from_element(1, 1e12),
            &DVector::from_element(1, 100.0),
            &[false],
        )
        .unwrap();
        let rel = (&post.mean - &prior.mean).amax() / prior.mean.amax();
        assert!(rel < 1e-6);
    }

    #[test]
    fn perfect_measurement_pins_component() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let prior = random_belief(2, &mut rng);
        let engine = EngineKind::Ckf;
        let stats = engine
            .measurement_stats(&prior, &|x| x.rows(0, 1).into_owned(), 1)
            .unwrap();
        let post = mse_update(
            &prior,
            &stats,
            &DVector::from_element(1, 1e-12),
            &DVector::from_element(1, 0.37),
            &[false],
        )
        .unwrap();
        assert!((post.mean[0] - 0.37).abs() < 1e-6);
    }

    #[test]
    fn ukf_and_ckf_agree_on_linear_systems() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 4;
        let belief = random_belief(n, &mut rng);
        let f_mat = DMatrix::from_fn(n, n, |_, _| 0.4 * (rng.random::<f64>() - 0.5));
        let sqrt_q = DMatrix::identity(n, n) * 0.1;
        let f = |x: &DVector<f64>| &f_mat * x;
        for kappa in [3.0 - n as f64, 0.0] {
            let a = EngineKind::Ukf { kappa }.predict(&belief, &f, &sqrt_q).unwrap();
            let b = EngineKind::Ckf.predict(&belief, &f, &sqrt_q).unwrap();
            assert!((&a.mean - &b.mean).amax() < 1e-9, "kappa={kappa}");
            assert!((a.cov() - b.cov()).abs().max() < 1e-9, "kappa={kappa}");
        }
    }

    #[test]
    fn wrapped_residual_handles_pi_crossing() {
        let y = DVector::from_column_slice(&[3.1, 1.0]);
        let y_pred = DVector::from_column_slice(&[-3.1, 0.5]);
        let r = wrapped_residual(&y, &y_pred, &[true, false]);
        assert!((r[0] - (6.2 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert_abs_diff_eq!(r[1], 0.5, epsilon = 1e-15);
    }
}
