//! Measurement side of the navigation problem: heavy-tailed
//! Gaussian-mixture noise, the two measurement models (with and without
//! the acoustic position fix), beacon bearing/triangulation geometry and
//! measurement synthesis from a truth trajectory.

use crate::dynamics::{NavState, TruthSeries};
use crate::geodesy::{
    dcm_body_to_nav, geodetic_to_ned, wrap_angle, EarthModel, GeodesyError, GeodeticPosition,
};
use nalgebra::{DVector, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("mixture weights must be positive and sum to one (sum = {0})")]
    BadMixture(f64),
    #[error("accelerometer attitude inversion out of domain: |{0}| > 1")]
    OutOfDomain(f64),
    #[error("vehicle horizontally coincident with a beacon")]
    CoincidentBeacon,
    #[error("bearing lines are parallel, no unique fix")]
    DegenerateGeometry,
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
}

/// One Gaussian component of a scalar mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// Weighted sum of scalar Gaussians; every measurement channel noise is
/// one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<MixtureComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, f64, f64)>) -> Result<Self, SensorError> {
        let gm = GaussianMixture {
            components: components
                .into_iter()
                .map(|(weight, mean, std)| MixtureComponent { weight, mean, std })
                .collect(),
        };
        gm.validate()?;
        Ok(gm)
    }

    /// Pure Gaussian as a degenerate mixture.
    pub fn gaussian(std: f64) -> Self {
        GaussianMixture {
            components: vec![MixtureComponent { weight: 1.0, mean: 0.0, std }],
        }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        if self.components.is_empty()
            || (sum - 1.0).abs() > 1e-12
            || self.components.iter().any(|c| c.weight <= 0.0 || c.std < 0.0)
        {
            return Err(SensorError::BadMixture(sum));
        }
        Ok(())
    }

    /// Draw a component by weight, then a Gaussian sample from it.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().unwrap();
        for c in &self.components {
            acc += c.weight;
            if u <= acc {
                chosen = c;
                break;
            }
        }
        let n = Normal::new(chosen.mean, chosen.std.max(0.0)).unwrap();
        n.sample(rng)
    }

    /// Closed-form variance of the mixture.
    pub fn equivalent_cov(&self) -> f64 {
        let mean: f64 = self.components.iter().map(|c| c.weight * c.mean).sum();
        let second: f64 = self
            .components
            .iter()
            .map(|c| c.weight * (c.std * c.std + c.mean * c.mean))
            .sum();
        second - mean * mean
    }

    /// Mixture with all means and stds multiplied by `k` (unit change).
    pub fn scaled(&self, k: f64) -> Self {
        GaussianMixture {
            components: self
                .components
                .iter()
                .map(|c| MixtureComponent { weight: c.weight, mean: c.mean * k, std: c.std * k })
                .collect(),
        }
    }
}

/// Which measurement model a vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// DVL velocity, depth, roll/pitch, yaw: 7 channels.
    ModelI,
    /// Model I plus the acoustic (lat, lon) fix: 9 channels.
    ModelII,
}

impl ModelKind {
    pub fn dim(&self) -> usize {
        match self {
            ModelKind::ModelI => 7,
            ModelKind::ModelII => 9,
        }
    }

    /// Channels that are angles, for residual wrapping.
    pub fn angular_mask(&self) -> Vec<bool> {
        let mut mask = vec![false, false, false, false, true, true, true];
        if let ModelKind::ModelII = self {
            mask.extend([true, true]);
        }
        mask
    }
}

/// Measurement at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub values: DVector<f64>,
    pub kind: ModelKind,
    pub t: f64,
}

/// Two surface beacons plus the reference point used for the local NED
/// plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApsGeometry {
    pub gib1: GeodeticPosition,
    pub gib2: GeodeticPosition,
    pub ref_point: GeodeticPosition,
}

impl ApsGeometry {
    /// Beacon constellation of the reference engagement.
    pub fn reference() -> Self {
        ApsGeometry {
            gib1: GeodeticPosition::new(18.9461_f64.to_radians(), 72.8541_f64.to_radians(), 0.0),
            gib2: GeodeticPosition::new(18.9459_f64.to_radians(), 72.8539_f64.to_radians(), 0.0),
            ref_point: GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 0.0),
        }
    }
}

/// Noise-free measurement function of model I: `h` selects the velocity,
/// depth and attitude states directly.
pub fn measure_model1(x: &NavState) -> Result<DVector<f64>, SensorError> {
    x.att.check_gimbal()?;
    Ok(DVector::from_column_slice(&[
        x.vel_ned.x,
        x.vel_ned.y,
        x.vel_ned.z,
        x.pos.depth,
        wrap_angle(x.att.roll),
        wrap_angle(x.att.pitch),
        wrap_angle(x.att.yaw),
    ]))
}

/// Noise-free measurement function of model II: model I channels plus
/// latitude and longitude. The acoustic fix composed with the bearing
/// model is the identity on horizontal position, so `h` returns the
/// position states directly.
pub fn measure_model2(x: &NavState) -> Result<DVector<f64>, SensorError> {
    let mut v = measure_model1(x)?.as_slice().to_vec();
    v.push(x.pos.lat);
    v.push(wrap_angle(x.pos.lon));
    Ok(DVector::from_vec(v))
}

/// Roll and pitch recovered from a quasi-static accelerometer reading:
/// `theta = asin(fx/g)`, `phi = -asin(fy/(g cos theta))`.
pub fn roll_pitch_from_accel(f_b: &Vector3<f64>, g: f64) -> Result<(f64, f64), SensorError> {
    let sx = f_b.x / g;
    if sx.abs() > 1.0 {
        return Err(SensorError::OutOfDomain(sx));
    }
    let theta = sx.asin();
    let sy = f_b.y / (g * theta.cos());
    if sy.abs() > 1.0 {
        return Err(SensorError::OutOfDomain(sy));
    }
    Ok((-sy.asin(), theta))
}

/// Bearings from the two beacons to the vehicle in the horizontal NED
/// plane, measured from east toward north.
pub fn aps_bearings(
    x: &NavState,
    geom: &ApsGeometry,
    earth: &EarthModel,
) -> Result<(f64, f64), SensorError> {
    let vehicle = geodetic_to_ned(&x.pos, &geom.ref_point, earth);
    let bearing = |gib: &GeodeticPosition| -> Result<f64, SensorError> {
        let b = geodetic_to_ned(gib, &geom.ref_point, earth);
        let dn = vehicle.x - b.x;
        let de = vehicle.y - b.y;
        if dn.hypot(de) < 1e-6 {
            return Err(SensorError::CoincidentBeacon);
        }
        Ok(dn.atan2(de))
    };
    Ok((bearing(&geom.gib1)?, bearing(&geom.gib2)?))
}

/// Horizontal position from two bearings by intersecting the bearing
/// lines in the (lon, lat) plane. The bearing tangents act as line
/// slopes after the local equirectangular scaling between NED meters
/// and geodetic radians.
pub fn aps_fix(
    beta1: f64,
    beta2: f64,
    geom: &ApsGeometry,
    earth: &EarthModel,
) -> Result<(f64, f64), SensorError> {
    let (r_m, r_n) = earth.curvature_radii(geom.ref_point.lat);
    let east_scale = r_n * geom.ref_point.lat.cos();
    // Direction of each bearing line in (lon, lat) coordinates.
    let dir = |beta: f64| Vector2::new(beta.cos() / east_scale, beta.sin() / r_m).normalize();
    let u1 = dir(beta1);
    let u2 = dir(beta2);
    // The normalized cross product is the sine of the angle between the
    // sightlines; near-parallel or near-antiparallel lines have no
    // usable intersection.
    let cross = u1.x * u2.y - u1.y * u2.x;
    if cross.abs() < 1e-5 {
        return Err(SensorError::DegenerateGeometry);
    }
    // gib1 + t*u1 = gib2 + s*u2, solve for t.
    let dx = geom.gib2.lon - geom.gib1.lon;
    let dy = geom.gib2.lat - geom.gib1.lat;
    let t = (dx * u2.y - dy * u2.x) / cross;
    let lon = geom.gib1.lon + t * u1.x;
    let lat = geom.gib1.lat + t * u1.y;
    Ok((lat, lon))
}

/// Per-channel mixture noises of a measurement vector, all in the state
/// units (radians for angles).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementNoise {
    pub vel_north: GaussianMixture,
    pub vel_east: GaussianMixture,
    pub vel_down: GaussianMixture,
    pub depth: GaussianMixture,
    pub roll: GaussianMixture,
    pub pitch: GaussianMixture,
    pub yaw: GaussianMixture,
    pub lat: GaussianMixture,
    pub lon: GaussianMixture,
}

impl MeasurementNoise {
    /// The heavy-tailed mixtures of the reference engagement.
    pub fn reference() -> Self {
        let vel = GaussianMixture::new(vec![(0.9, 0.0, 0.1), (0.1, 0.0, 1.0)]).unwrap();
        let depth = GaussianMixture::new(vec![(0.9, 0.0, 1.0), (0.1, 0.0, 10.0)]).unwrap();
        let ang = GaussianMixture::new(vec![
            (0.9, 0.0, 0.5_f64.to_radians()),
            (0.1, 0.0, 1.0_f64.to_radians()),
        ])
        .unwrap();
        let pos = GaussianMixture::new(vec![
            (0.9, 0.0, 0.0898_f64.to_radians()),
            (0.1, 0.0, 0.898_f64.to_radians()),
        ])
        .unwrap();
        MeasurementNoise {
            vel_north: vel.clone(),
            vel_east: vel.clone(),
            vel_down: vel,
            depth,
            roll: ang.clone(),
            pitch: ang.clone(),
            yaw: ang,
            lat: pos.clone(),
            lon: pos,
        }
    }

    /// Benchmark mixtures: [`MeasurementNoise::reference`] with two
    /// adjustments that keep every channel on the same tenfold
    /// nominal-to-impulsive pattern as the velocity and depth channels.
    ///
    /// The acoustic position channels are scaled from degrees to
    /// millidegrees: at degree scale a single fix is tens of kilometres
    /// off, which drowns the horizontal states, while at millidegree
    /// scale (roughly 10 m nominal, 100 m impulsive) the fix quality
    /// matches the beacon geometry and the blackout transition is
    /// visible in the error curves. The attitude channels keep their
    /// 1 degree impulsive component but use a 0.1 degree nominal one,
    /// so the tail is an outlier rather than twice the nominal spread.
    pub fn benchmark() -> Self {
        let mut noise = Self::reference();
        noise.lat = noise.lat.scaled(1e-3);
        noise.lon = noise.lon.scaled(1e-3);
        let ang = GaussianMixture::new(vec![
            (0.9, 0.0, 0.1_f64.to_radians()),
            (0.1, 0.0, 1.0_f64.to_radians()),
        ])
        .unwrap();
        noise.roll = ang.clone();
        noise.pitch = ang.clone();
        noise.yaw = ang;
        noise
    }

    /// Mixture with every std forced to zero (noise-free synthesis).
    pub fn zeroed() -> Self {
        let z = GaussianMixture::gaussian(0.0);
        MeasurementNoise {
            vel_north: z.clone(),
            vel_east: z.clone(),
            vel_down: z.clone(),
            depth: z.clone(),
            roll: z.clone(),
            pitch: z.clone(),
            yaw: z.clone(),
            lat: z.clone(),
            lon: z,
        }
    }

    fn channels(&self) -> [&GaussianMixture; 9] {
        [
            &self.vel_north,
            &self.vel_east,
            &self.vel_down,
            &self.depth,
            &self.roll,
            &self.pitch,
            &self.yaw,
            &self.lat,
            &self.lon,
        ]
    }

    /// Diagonal of the equivalent measurement covariance for a model.
    pub fn equivalent_cov_diag(&self, kind: ModelKind) -> DVector<f64> {
        DVector::from_iterator(
            kind.dim(),
            self.channels().iter().take(kind.dim()).map(|gm| gm.equivalent_cov()),
        )
    }
}

/// Synthesize the 1 Hz measurement stream from a truth series, one
/// sample per second starting at `t = 1` (the initial state has no
/// measurement, and the reference scenario starts the vehicle on the
/// beacon baseline where triangulation is singular). The acoustic fix is
/// attached while `t <= aps_cutoff_t` (model II), model I afterwards.
pub fn synthesize_measurements<R: Rng>(
    truth: &TruthSeries,
    noise: &MeasurementNoise,
    geom: &ApsGeometry,
    aps_cutoff_t: f64,
    earth: &EarthModel,
    rng: &mut R,
) -> Result<Vec<MeasurementVector>, SensorError> {
    let states = truth.at_one_hz();
    let mut out = Vec::with_capacity(states.len().saturating_sub(1));
    for (k, x) in states.iter().enumerate().skip(1) {
        let t = k as f64;
        let c = dcm_body_to_nav(&x.att);
        // DVL noise enters in the body frame and is rotated back.
        let r_v = Vector3::new(
            noise.vel_north.sample(rng),
            noise.vel_east.sample(rng),
            noise.vel_down.sample(rng),
        );
        let v_meas = c * (c.transpose() * x.vel_ned + r_v);
        let z_meas = x.pos.depth + noise.depth.sample(rng);
        // Roll/pitch are manufactured from the quasi-static (gravity-only)
        // specific force, then take additive angle-channel noise.
        let f_static = c.transpose() * Vector3::new(0.0, 0.0, -earth.gravity);
        let (phi, theta) = roll_pitch_from_accel(&f_static, earth.gravity)?;
        let phi_meas = wrap_angle(phi + noise.roll.sample(rng));
        let theta_meas = theta + noise.pitch.sample(rng);
        let psi_meas = wrap_angle(x.att.yaw + noise.yaw.sample(rng));
        let mut values = vec![v_meas.x, v_meas.y, v_meas.z, z_meas, phi_meas, theta_meas, psi_meas];
        let kind = if t <= aps_cutoff_t {
            let (b1, b2) = aps_bearings(x, geom, earth)?;
            let (lat, lon) = aps_fix(b1, b2, geom, earth)?;
            values.push(lat + noise.lat.sample(rng));
            values.push(wrap_angle(lon + noise.lon.sample(rng)));
            ModelKind::ModelII
        } else {
            ModelKind::ModelI
        };
        out.push(MeasurementVector { values: DVector::from_vec(values), kind, t });
    }
    Ok(out)
}
