//! Ensemble error metrics. The root-mean-square formula ships in two
//! forms: the printed benchmark form (ensemble mean of the absolute
//! error) and the conventional square root of the mean squared error.

use super::config::RmseForm;
use crate::dynamics::NavState;
use crate::geodesy::{wrap_angle, EarthModel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("mismatched series lengths: {0} vs {1}")]
    MismatchedLengths(usize, usize),
    #[error("empty ensemble")]
    EmptyEnsemble,
}

/// Reported state order: north/east/down position errors in meters, NED
/// velocity errors in m/s, attitude errors in degrees.
pub const STATE_NAMES: [&str; 9] = [
    "north", "east", "down", "vel_north", "vel_east", "vel_down", "roll", "pitch", "yaw",
];

/// Error of one estimate against the truth, in reporting units.
pub fn reporting_error(estimate: &NavState, truth: &NavState, earth: &EarthModel) -> [f64; 9] {
    let (r_m, r_n) = earth.curvature_radii(truth.pos.lat);
    [
        (estimate.pos.lat - truth.pos.lat) * (r_m + truth.pos.depth),
        wrap_angle(estimate.pos.lon - truth.pos.lon) * (r_n + truth.pos.depth) * truth.pos.lat.cos(),
        estimate.pos.depth - truth.pos.depth,
        estimate.vel_ned.x - truth.vel_ned.x,
        estimate.vel_ned.y - truth.vel_ned.y,
        estimate.vel_ned.z - truth.vel_ned.z,
        wrap_angle(estimate.att.roll - truth.att.roll).to_degrees(),
        wrap_angle(estimate.att.pitch - truth.att.pitch).to_degrees(),
        wrap_angle(estimate.att.yaw - truth.att.yaw).to_degrees(),
    ]
}

/// Per-state ensemble root-mean-square error at every time step.
/// `errors[run][step][state]`, output `[step][state]`.
pub fn rmse(errors: &[Vec<[f64; 9]>], form: RmseForm) -> Result<Vec<[f64; 9]>, MetricsError> {
    let runs = errors.len();
    if runs == 0 {
        return Err(MetricsError::EmptyEnsemble);
    }
    let steps = errors[0].len();
    for run in errors {
        if run.len() != steps {
            return Err(MetricsError::MismatchedLengths(steps, run.len()));
        }
    }
    let mut out = vec![[0.0; 9]; steps];
    for run in errors {
        for (k, e) in run.iter().enumerate() {
            for s in 0..9 {
                out[k][s] += match form {
                    RmseForm::Printed => e[s].abs(),
                    RmseForm::Conventional => e[s] * e[s],
                };
            }
        }
    }
    for row in &mut out {
        for v in row.iter_mut() {
            *v /= runs as f64;
            if form == RmseForm::Conventional {
                *v = v.sqrt();
            }
        }
    }
    Ok(out)
}

/// Time average of an RMSE series per state.
pub fn armse(series: &[[f64; 9]]) -> Result<[f64; 9], MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptyEnsemble);
    }
    let mut out = [0.0; 9];
    for row in series {
        for s in 0..9 {
            out[s] += row[s];
        }
    }
    for v in &mut out {
        *v /= series.len() as f64;
    }
    Ok(out)
}

/// Mean of one state's RMSE over a closed time window, with `t` of the
/// `k`-th entry being `t0 + k`.
pub fn window_mean(series: &[[f64; 9]], state: usize, t0: f64, from: f64, to: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, row) in series.iter().enumerate() {
        let t = t0 + k as f64;
        if t >= from && t <= to {
            sum += row[state];
            count += 1;
        }
    }
    sum / count.max(1) as f64
}

/// Median of one state's RMSE over a closed time window.
pub fn window_median(series: &[[f64; 9]], state: usize, t0: f64, from: f64, to: f64) -> f64 {
    let mut vals: Vec<f64> = series
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let t = t0 + *k as f64;
            t >= from && t <= to
        })
        .map(|(_, row)| row[state])
        .collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    if vals.is_empty() {
        return f64::NAN;
    }
    let mid = vals.len() / 2;
    if vals.len() % 2 == 1 {
        vals[mid]
    } else {
        0.5 * (vals[mid - 1] + vals[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn constant_error_single_run() {
        let run = vec![vec![[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 5]];
        let r = rmse(&run, RmseForm::Printed).unwrap();
        for row in &r {
            assert_eq!(row[0], 2.0);
        }
        assert_eq!(armse(&r).unwrap()[0], 2.0);
    }

    #[test]
    fn symmetric_errors_use_per_run_magnitude() {
        let a = vec![[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 3];
        let b = vec![[-3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 3];
        let r = rmse(&[a, b][..].to_vec(), RmseForm::Printed).unwrap();
        assert_eq!(r[0][0], 3.0);
    }

    #[test]
    fn printed_form_is_half_normal_mean() {
        // Standard normal ensemble: printed RMSE approaches sqrt(2/pi),
        // the conventional form approaches 1.
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let runs = 4000;
        let normal = rand_distr::StandardNormal;
        let ens: Vec<Vec<[f64; 9]>> = (0..runs)
            .map(|_| {
                let mut e = [0.0; 9];
                e[0] = rng.sample::<f64, _>(normal);
                vec![e]
            })
            .collect();
        let printed = rmse(&ens, RmseForm::Printed).unwrap()[0][0];
        let conventional = rmse(&ens, RmseForm::Conventional).unwrap()[0][0];
        let half_normal = (2.0 / std::f64::consts::PI).sqrt();
        assert!((printed - half_normal).abs() / half_normal < 0.1, "{printed}");
        assert!((conventional - 1.0).abs() < 0.1, "{conventional}");
    }

    #[test]
    fn mismatched_lengths_detected() {
        let a = vec![[0.0; 9]; 3];
        let b = vec![[0.0; 9]; 4];
        assert!(matches!(
            rmse(&[a, b][..].to_vec(), RmseForm::Printed),
            Err(MetricsError::MismatchedLengths(3, 4))
        ));
    }

    #[test]
    fn window_statistics() {
        let mut series = vec![[0.0; 9]; 10];
        for (k, row) in series.iter_mut().enumerate() {
            row[2] = k as f64;
        }
        assert_abs_diff_eq!(window_mean(&series, 2, 1.0, 3.0, 5.0), 3.0);
        assert_abs_diff_eq!(window_median(&series, 2, 1.0, 1.0, 10.0), 4.5);
    }
}
