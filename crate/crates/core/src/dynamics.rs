//! SINS mechanization and scenario machinery: continuous navigation
//! dynamics, RK4 propagation, truth-trajectory generation from a staged
//! manoeuvre schedule, and IMU sample synthesis.
//!
//! The nine navigation states are `[L, l, Z, vN, vE, vD, roll, pitch, yaw]`
//! with geodetic angles in radians and depth positive down.

use crate::geodesy::{
    dcm_body_to_nav, euler_rate_matrix, Attitude, EarthModel, GeodesyError,
    GeodeticPosition,
};
use nalgebra::{DVector, SVector, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateVector = SVector<f64, 9>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error("euler-rate matrix is numerically singular")]
    Singular,
    #[error("manoeuvre schedule has a gap or overlap near t = {0} s")]
    ScheduleGap(f64),
}

/// Full navigation state: geodetic position, NED velocity, attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    pub pos: GeodeticPosition,
    pub vel_ned: Vector3<f64>,
    pub att: Attitude,
}

impl NavState {
    pub fn to_vector(&self) -> StateVector {
        SVector::from([
            self.pos.lat,
            self.pos.lon,
            self.pos.depth,
            self.vel_ned.x,
            self.vel_ned.y,
            self.vel_ned.z,
            self.att.roll,
            self.att.pitch,
            self.att.yaw,
        ])
    }

    pub fn from_vector(v: &StateVector) -> Self {
        NavState {
            pos: GeodeticPosition::new(v[0], v[1], v[2]),
            vel_ned: Vector3::new(v[3], v[4], v[5]),
            att: Attitude::new(v[6], v[7], v[8]),
        }
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.to_vector().as_slice())
    }
}

/// One IMU reading: specific force and body rate in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub specific_force: Vector3<f64>,
    pub body_rate: Vector3<f64>,
    pub t: f64,
}

/// One row of the manoeuvre schedule. NED acceleration input in m/s^2,
/// Euler rates in rad/s. Stages are half-open `[t_start, t_end)` except
/// the final stage which includes its endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStage {
    pub t_start: f64,
    pub t_end: f64,
    pub accel_ned: [f64; 3],
    pub rates: [f64; 3],
}

/// Validated contiguous stage schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    stages: Vec<ScenarioStage>,
}

impl Scenario {
    pub fn new(stages: Vec<ScenarioStage>) -> Result<Self, DynamicsError> {
        if stages.is_empty() {
            return Err(DynamicsError::ScheduleGap(0.0));
        }
        for pair in stages.windows(2) {
            if (pair[0].t_end - pair[1].t_start).abs() > 1e-9 {
                return Err(DynamicsError::ScheduleGap(pair[0].t_end));
            }
        }
        for s in &stages {
            if s.t_end <= s.t_start {
                return Err(DynamicsError::ScheduleGap(s.t_start));
            }
        }
        Ok(Scenario { stages })
    }

    pub fn stages(&self) -> &[ScenarioStage] {
        &self.stages
    }

    pub fn t_start(&self) -> f64 {
        self.stages[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.stages.last().unwrap().t_end
    }

    /// Stage active at time `t`.
    pub fn active(&self, t: f64) -> &ScenarioStage {
        for s in &self.stages {
            if t < s.t_end {
                return s;
            }
        }
        self.stages.last().unwrap()
    }
}

/// Per-step (1 s) discrete process noise, diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessNoiseSpec {
    pub diag: StateVector,
}

impl ProcessNoiseSpec {
    /// Zero position noise, `(5e-5 g)^2` velocity noise and
    /// `(0.02 deg / sqrt(hr))^2` attitude noise per 1 s step.
    pub fn standard(earth: &EarthModel) -> Self {
        let sv = 5e-5 * earth.gravity;
        let sa = (0.02_f64 / 60.0).to_radians();
        let mut diag = StateVector::zeros();
        for i in 3..6 {
            diag[i] = sv * sv;
        }
        for i in 6..9 {
            diag[i] = sa * sa;
        }
        ProcessNoiseSpec { diag }
    }
}

/// Default IMU noise consistent with [`ProcessNoiseSpec::standard`]:
/// accelerometer std in m/s^2, gyro std in rad/s, both per 1 Hz sample.
pub fn default_imu_noise(earth: &EarthModel) -> (f64, f64) {
    (5e-5 * earth.gravity, (0.02_f64 / 60.0).to_radians())
}

/// Continuous-time navigation derivative driven by IMU inputs.
pub fn nav_derivative(
    x: &NavState,
    f_b: &Vector3<f64>,
    w_ib_b: &Vector3<f64>,
    earth: &EarthModel,
) -> Result<StateVector, DynamicsError> {
    x.att.check_gimbal()?;
    let (r_m, r_n) = earth.curvature_radii(x.pos.lat);
    let z = x.pos.depth;
    let v = x.vel_ned;

    let lat_dot = v.x / (r_m + z);
    let lon_dot = v.y / ((r_n + z) * x.pos.lat.cos());
    let depth_dot = -v.z;

    let c = dcm_body_to_nav(&x.att);
    let w_ie = earth.earth_rate_nav(x.pos.lat);
    let w_en = earth.transport_rate(x.pos.lat, z, &v);
    let coriolis = (2.0 * w_ie + w_en).cross(&v);
    let g_n = Vector3::new(0.0, 0.0, earth.gravity);
    let v_dot = c * f_b + g_n - coriolis;

    let omega = euler_rate_matrix(&x.att);
    let w_body = w_ib_b - c.transpose() * (w_ie + w_en);
    let att_dot = omega
        .lu()
        .solve(&w_body)
        .ok_or(DynamicsError::Singular)?;

    Ok(SVector::from([
        lat_dot, lon_dot, depth_dot, v_dot.x, v_dot.y, v_dot.z, att_dot.x, att_dot.y, att_dot.z,
    ]))
}

fn rk4_step<F>(x: &StateVector, dt: f64, deriv: F) -> Result<StateVector, DynamicsError>
where
    F: Fn(&StateVector) -> Result<StateVector, DynamicsError>,
{
    let k1 = deriv(x)?;
    let k2 = deriv(&(x + 0.5 * dt * k1))?;
    let k3 = deriv(&(x + 0.5 * dt * k2))?;
    let k4 = deriv(&(x + dt * k3))?;
    Ok(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// One RK4 step of [`nav_derivative`] with the IMU inputs held constant.
pub fn propagate(
    x: &NavState,
    imu: &ImuSample,
    dt: f64,
    earth: &EarthModel,
) -> Result<NavState, DynamicsError> {
    let v = x.to_vector();
    let next = rk4_step(&v, dt, |s| {
        nav_derivative(&NavState::from_vector(s), &imu.specific_force, &imu.body_rate, earth)
    })?;
    Ok(NavState::from_vector(&next))
}

/// Truth series sampled at a fixed step.
#[derive(Debug, Clone)]
pub struct TruthSeries {
    pub dt: f64,
    pub states: Vec<NavState>,
}

impl TruthSeries {
    /// Decimate to 1 Hz, index k holds the state at t = k seconds.
    pub fn at_one_hz(&self) -> Vec<NavState> {
        let per_sec = (1.0 / self.dt).round() as usize;
        self.states.iter().step_by(per_sec).copied().collect()
    }

    pub fn state_at(&self, t: f64) -> &NavState {
        let idx = (t / self.dt).round() as usize;
        &self.states[idx.min(self.states.len() - 1)]
    }
}

/// Truth derivative: NED specific-force input applied directly in the
/// navigation frame, attitude driven by the stage Euler rates.
fn truth_derivative(
    x: &NavState,
    stage: &ScenarioStage,
    earth: &EarthModel,
) -> Result<StateVector, DynamicsError> {
    let (r_m, r_n) = earth.curvature_radii(x.pos.lat);
    let z = x.pos.depth;
    let v = x.vel_ned;

    let lat_dot = v.x / (r_m + z);
    let lon_dot = v.y / ((r_n + z) * x.pos.lat.cos());
    let depth_dot = -v.z;

    let w_ie = earth.earth_rate_nav(x.pos.lat);
    let w_en = earth.transport_rate(x.pos.lat, z, &v);
    let f_n = Vector3::from(stage.accel_ned);
    let g_n = Vector3::new(0.0, 0.0, earth.gravity);
    let v_dot = f_n + g_n - (2.0 * w_ie + w_en).cross(&v);

    Ok(SVector::from([
        lat_dot,
        lon_dot,
        depth_dot,
        v_dot.x,
        v_dot.y,
        v_dot.z,
        stage.rates[0],
        stage.rates[1],
        stage.rates[2],
    ]))
}

/// Integrate the staged truth trajectory from `x0` at step `dt_truth`.
pub fn generate_truth(
    scenario: &Scenario,
    x0: &NavState,
    dt_truth: f64,
    earth: &EarthModel,
) -> Result<TruthSeries, DynamicsError> {
    let steps = ((scenario.t_end() - scenario.t_start()) / dt_truth).round() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vector();
    states.push(*x0);
    for k in 0..steps {
        let t = scenario.t_start() + k as f64 * dt_truth;
        let stage = scenario.active(t);
        x = rk4_step(&x, dt_truth, |s| {
            truth_derivative(&NavState::from_vector(s), stage, earth)
        })?;
        states.push(NavState::from_vector(&x));
    }
    Ok(TruthSeries { dt: dt_truth, states })
}

/// Synthesize IMU samples matching a truth series: the specific force is
/// the stage NED input rotated into the body frame, the body rate is the
/// Euler-rate term plus Earth and transport rates seen from the body.
/// Gaussian noise stds `(sigma_a, sigma_g)` are given per 1 Hz sample and
/// scaled by `1/sqrt(dt)` for faster sampling.
pub fn synthesize_imu<R: Rng>(
    truth: &TruthSeries,
    scenario: &Scenario,
    noise: (f64, f64),
    earth: &EarthModel,
    rng: &mut R,
) -> Vec<ImuSample> {
    let scale = 1.0 / truth.dt.sqrt();
    let (sigma_a, sigma_g) = (noise.0 * scale, noise.1 * scale);
    let normal = Normal::new(0.0, 1.0).unwrap();
    truth
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let t = scenario.t_start() + k as f64 * truth.dt;
            let stage = scenario.active(t);
            let c = dcm_body_to_nav(&x.att);
            let f_b = c.transpose() * Vector3::from(stage.accel_ned);
            let w_ie = earth.earth_rate_nav(x.pos.lat);
            let w_en = earth.transport_rate(x.pos.lat, x.pos.depth, &x.vel_ned);
            let omega = euler_rate_matrix(&x.att);
            let w_ib = omega * Vector3::from(stage.rates) + c.transpose() * (w_ie + w_en);
            let mut sample = ImuSample { specific_force: f_b, body_rate: w_ib, t };
            if sigma_a > 0.0 || sigma_g > 0.0 {
                let mut draw = || normal.sample(rng);
                sample.specific_force += sigma_a * Vector3::new(draw(), draw(), draw());
                sample.body_rate += sigma_g * Vector3::new(draw(), draw(), draw());
            }
            sample
        })
        .collect()
}

/// Block-average fine-rate IMU samples into integrating outputs, one per
/// window of `per_window` samples. A strapdown unit reports velocity and
/// angle increments accumulated over its output interval; feeding the
/// interval mean to a zero-order-hold mechanization leaves only
/// second-order error where an instantaneous start-of-interval sample
/// leaves a first-order one (about 0.03 m/s^2 during 0.4 deg/s attitude
/// stages, from gravity rotating in the body frame). A trailing partial
/// window is dropped.
pub fn average_imu(samples: &[ImuSample], per_window: usize) -> Vec<ImuSample> {
    samples
        .chunks_exact(per_window.max(1))
        .map(|chunk| {
            let inv = 1.0 / chunk.len() as f64;
            let mut f = Vector3::zeros();
            let mut w = Vector3::zeros();
            for s in chunk {
                f += s.specific_force;
                w += s.body_rate;
            }
            ImuSample {
                specific_force: f * inv,
                body_rate: w * inv,
                t: chunk[0].t,
            }
        })
        .collect()
}

/// The manoeuvre schedule of the reference engagement: 900 s of staged
/// accelerations and Euler rates, rates stated in deg/s in the source
/// table and converted here.
pub fn reference_scenario(earth: &EarthModel) -> Scenario {
    let g = earth.gravity;
    let d = |x: f64| x.to_radians();
    let rows: Vec<(f64, f64, [f64; 3], [f64; 3])> = vec![
        (0.0, 100.0, [0.0, 1.0 / 20.0, -g], [0.0, 0.0, 0.0]),
        (100.0, 150.0, [0.0, 0.018, -(g + 0.04)], [0.0, d(0.4), 0.0]),
        (150.0, 200.0, [0.0, 0.0, -g], [0.0, 0.0, 0.0]),
        (200.0, 250.0, [0.0, 0.018, -(g - 0.04)], [0.0, d(-0.4), 0.0]),
        (250.0, 350.0, [0.0, 0.0, -g], [0.0, 0.0, 0.0]),
        (350.0, 355.0, [0.0, 0.0, -g], [d(0.4), 0.0, 0.0]),
        (355.0, 450.0, [0.053, -1.0 / 20.0, -g], [0.0, 0.0, d(19.0 / 20.0)]),
        (450.0, 455.0, [0.0, 0.0, -g], [d(-0.4), 0.0, 0.0]),
        (455.0, 500.0, [0.0, 0.0, -g], [0.0, 0.0, 0.0]),
        (500.0, 505.0, [0.0, 0.0, -g], [d(-0.4), 0.0, 0.0]),
        (505.0, 600.0, [-0.053, 1.0 / 20.0, -g], [0.0, 0.0, d(19.0 / 20.0)]),
        (600.0, 605.0, [0.0, 0.0, -g], [d(0.4), 0.0, 0.0]),
        (605.0, 650.0, [0.0, 0.0, -g], [0.0, 0.0, 0.0]),
        (650.0, 700.0, [0.0, -1.0 / 20.0, -g], [0.0, 0.0, 0.0]),
        (700.0, 900.0, [0.0, 0.0, -g], [0.0, 0.0, 0.0]),
    ];
    Scenario::new(
        rows.into_iter()
            .map(|(t_start, t_end, accel_ned, rates)| ScenarioStage {
                t_start,
                t_end,
                accel_ned,
                rates,
            })
            .collect(),
    )
    .expect("reference schedule is contiguous")
}

/// Initial truth state of the reference engagement: stationary at 50 m
/// depth, 18.946 N 72.854 E, level attitude.
pub fn reference_initial_state() -> NavState {
    NavState {
        pos: GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 50.0),
        vel_ned: Vector3::zeros(),
        att: Attitude::new(0.0, 0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::STANDARD_GRAVITY;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn hover_state() -> NavState {
        NavState {
            pos: GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 50.0),
            vel_ned: Vector3::zeros(),
            att: Attitude::new(0.0, 0.0, 0.0),
        }
    }

    #[test]
    fn hover_is_stationary() {
        let earth = EarthModel::default();
        let x = hover_state();
        let f_b = Vector3::new(0.0, 0.0, -earth.gravity);
        let c = dcm_body_to_nav(&x.att);
        let w_ib = c.transpose() * earth.earth_rate_nav(x.pos.lat);
        let d = nav_derivative(&x, &f_b, &w_ib, &earth).unwrap();
        assert!(d.amax() < 1e-10, "derivative {:?}", d);
    }

    #[test]
    fn zero_velocity_means_zero_position_rate() {
        let earth = EarthModel::default();
        let x = hover_state();
        let d = nav_derivative(&x, &Vector3::zeros(), &Vector3::zeros(), &earth).unwrap();
        assert_eq!(d.fixed_rows::<3>(0), SVector::<f64, 3>::zeros());
    }

    #[test]
    fn coriolis_term_closed_form() {
        let earth = EarthModel::default();
        let mut x = hover_state();
        x.vel_ned = Vector3::new(0.0, 5.144, 0.0);
        let f_b = Vector3::new(0.0, 0.0, -earth.gravity);
        let d = nav_derivative(&x, &f_b, &Vector3::zeros(), &earth).unwrap();
        let w_ie = earth.earth_rate_nav(x.pos.lat);
        let w_en = earth.transport_rate(x.pos.lat, x.pos.depth, &x.vel_ned);
        let expected = -(2.0 * w_ie + w_en).cross(&x.vel_ned);
        assert_abs_diff_eq!(d[3], expected.x, epsilon = 1e-14);
        assert_abs_diff_eq!(d[4], expected.y, epsilon = 1e-14);
        assert_abs_diff_eq!(d[5], expected.z, epsilon = 1e-14);
    }

    #[test]
    fn gimbal_guard_rejected() {
        let earth = EarthModel::default();
        let mut x = hover_state();
        x.att.pitch = 89.0_f64.to_radians();
        let err = nav_derivative(&x, &Vector3::zeros(), &Vector3::zeros(), &earth).unwrap_err();
        assert!(matches!(err, DynamicsError::Geodesy(GeodesyError::GimbalLock(_))));
    }

    #[test]
    fn propagate_hover_fixed_point() {
        let earth = EarthModel::default();
        let x = hover_state();
        let c = dcm_body_to_nav(&x.att);
        let imu = ImuSample {
            specific_force: Vector3::new(0.0, 0.0, -earth.gravity),
            body_rate: c.transpose() * earth.earth_rate_nav(x.pos.lat),
            t: 0.0,
        };
        let next = propagate(&x, &imu, 1.0, &earth).unwrap();
        let (r_m, _) = earth.curvature_radii(x.pos.lat);
        assert!((next.pos.lat - x.pos.lat).abs() * r_m < 1e-9);
        assert!((next.pos.depth - x.pos.depth).abs() < 1e-9);
    }

    #[test]
    fn east_velocity_advances_longitude() {
        let earth = EarthModel::default();
        let mut x = hover_state();
        x.vel_ned = Vector3::new(0.0, 5.144, 0.0);
        let c = dcm_body_to_nav(&x.att);
        let w_ie = earth.earth_rate_nav(x.pos.lat);
        let w_en = earth.transport_rate(x.pos.lat, x.pos.depth, &x.vel_ned);
        // Specific force canceling gravity and Coriolis keeps velocity constant.
        let coriolis = (2.0 * w_ie + w_en).cross(&x.vel_ned);
        let f_b = c.transpose() * (coriolis - Vector3::new(0.0, 0.0, earth.gravity));
        let imu = ImuSample {
            specific_force: f_b,
            body_rate: c.transpose() * (w_ie + w_en),
            t: 0.0,
        };
        let next = propagate(&x, &imu, 1.0, &earth).unwrap();
        let (_, r_n) = earth.curvature_radii(x.pos.lat);
        let expected = 5.144 / ((r_n + 50.0) * x.pos.lat.cos());
        assert_abs_diff_eq!(next.pos.lon - x.pos.lon, expected, epsilon = 1e-9);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let earth = EarthModel::default();
        let mut x = hover_state();
        x.vel_ned = Vector3::new(1.0, 2.0, 0.2);
        x.att = Attitude::new(0.1, 0.05, 0.3);
        let imu = ImuSample {
            specific_force: Vector3::new(0.2, -0.1, -earth.gravity),
            body_rate: Vector3::new(0.01, 0.02, -0.015),
            t: 0.0,
        };
        let step = |x0: &NavState, dt: f64, n: usize| {
            let mut s = *x0;
            for _ in 0..n {
                s = propagate(&s, &imu, dt, &earth).unwrap();
            }
            s.to_vector()
        };
        let reference = step(&x, 1.0 / 64.0, 64);
        let e1 = (step(&x, 1.0, 1) - reference).amax();
        let e2 = (step(&x, 0.5, 2) - reference).amax();
        // Halving the step should shrink the error by about 2^4.
        assert!(e1 / e2 > 8.0, "e1={e1:.3e} e2={e2:.3e}");
    }

    #[test]
    fn truth_reaches_ten_knots_east() {
        let earth = EarthModel::default();
        let truth = generate_truth(&reference_scenario(&earth), &reference_initial_state(), 0.01, &earth).unwrap();
        let v100 = truth.state_at(100.0).vel_ned;
        assert!((v100.y - 5.0).abs() / 5.0 < 0.03, "vE(100) = {}", v100.y);
    }

    #[test]
    fn uniform_stage_holds_velocity() {
        let earth = EarthModel::default();
        let truth = generate_truth(&reference_scenario(&earth), &reference_initial_state(), 0.01, &earth).unwrap();
        // Coriolis coupling drifts the velocity slightly even with zero
        // commanded acceleration; at 5 m/s it stays below 0.05 m/s here.
        let dv = truth.state_at(200.0).vel_ned - truth.state_at(155.0).vel_ned;
        assert!(dv.norm() < 0.05, "dv = {}", dv.norm());
    }

    #[test]
    fn right_turn_yaw_change() {
        let earth = EarthModel::default();
        let truth = generate_truth(&reference_scenario(&earth), &reference_initial_state(), 0.01, &earth).unwrap();
        let dpsi = truth.state_at(450.0).att.yaw - truth.state_at(355.0).att.yaw;
        assert_abs_diff_eq!(dpsi.to_degrees(), 90.25, epsilon = 1e-6);
    }

    #[test]
    fn hover_imu_reads_minus_g() {
        let earth = EarthModel::default();
        let scenario = Scenario::new(vec![ScenarioStage {
            t_start: 0.0,
            t_end: 10.0,
            accel_ned: [0.0, 0.0, -earth.gravity],
            rates: [0.0, 0.0, 0.0],
        }])
        .unwrap();
        let truth = generate_truth(&scenario, &hover_state(), 0.1, &earth).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let imu = synthesize_imu(&truth, &scenario, (0.0, 0.0), &earth, &mut rng);
        let f = imu[0].specific_force;
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, -STANDARD_GRAVITY, epsilon = 1e-12);
    }

    #[test]
    fn pitch_stage_gyro_reads_pitch_rate() {
        let mut earth = EarthModel::default();
        earth.omega = 0.0; // suppress Earth rate so the gyro sees only the manoeuvre
        let scenario = reference_scenario(&earth);
        let truth = generate_truth(&scenario, &reference_initial_state(), 0.01, &earth).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let imu = synthesize_imu(&truth, &scenario, (0.0, 0.0), &earth, &mut rng);
        let idx = (120.0 / 0.01) as usize;
        let wy = imu[idx].body_rate.y.to_degrees();
        assert!((wy - 0.4).abs() < 1e-3, "wy = {wy}");
    }

    #[test]
    fn noise_free_imu_reproduces_truth() {
        let earth = EarthModel::default();
        let scenario = reference_scenario(&earth);
        let dt = 0.01;
        let truth = generate_truth(&scenario, &reference_initial_state(), dt, &earth).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let imu = synthesize_imu(&truth, &scenario, (0.0, 0.0), &earth, &mut rng);
        let mut x = reference_initial_state();
        for sample in imu.iter().take(truth.states.len() - 1) {
            x = propagate(&x, sample, dt, &earth).unwrap();
        }
        let last = truth.states.last().unwrap();
        let (r_m, r_n) = earth.curvature_radii(last.pos.lat);
        let dn = (x.pos.lat - last.pos.lat) * r_m;
        let de = (x.pos.lon - last.pos.lon) * r_n * last.pos.lat.cos();
        let dz = x.pos.depth - last.pos.depth;
        let err = (dn * dn + de * de + dz * dz).sqrt();
        // The zero-order hold of the inertial inputs across each step
        // leaves a small systematic residual during turns; anything at
        // the metre level over the 900 s track means the mechanization
        // and the synthesized sensors agree.
        assert!(err < 2.0, "closed-loop position error {err} m");
    }

    #[test]
    fn truth_step_insensitivity() {
        let earth = EarthModel::default();
        let scenario = reference_scenario(&earth);
        let x0 = reference_initial_state();
        let a = generate_truth(&scenario, &x0, 0.01, &earth).unwrap();
        let b = generate_truth(&scenario, &x0, 0.005, &earth).unwrap();
        let xa = a.states.last().unwrap();
        let xb = b.states.last().unwrap();
        let (r_m, r_n) = earth.curvature_radii(xa.pos.lat);
        let dn = (xa.pos.lat - xb.pos.lat) * r_m;
        let de = (xa.pos.lon - xb.pos.lon) * r_n * xa.pos.lat.cos();
        assert!(dn.hypot(de) < 1e-4, "dt sensitivity {} m", dn.hypot(de));
    }

    #[test]
    fn schedule_gap_detected() {
        let mk = |t0: f64, t1: f64| ScenarioStage {
            t_start: t0,
            t_end: t1,
            accel_ned: [0.0; 3],
            rates: [0.0; 3],
        };
        assert!(Scenario::new(vec![mk(0.0, 10.0), mk(11.0, 20.0)]).is_err());
        assert!(Scenario::new(vec![mk(0.0, 10.0), mk(10.0, 20.0)]).is_ok());
    }

    #[test]
    fn propagate_is_deterministic() {
        let earth = EarthModel::default();
        let x = hover_state();
        let imu = ImuSample {
            specific_force: Vector3::new(0.1, 0.2, -9.7),
            body_rate: Vector3::new(0.01, -0.02, 0.005),
            t: 0.0,
        };
        let a = propagate(&x, &imu, 1.0, &earth).unwrap();
        let b = propagate(&x, &imu, 1.0, &earth).unwrap();
        assert_eq!(a.to_vector(), b.to_vector());
    }
}
