//! Earth model constants, curvature radii, rotation matrices and
//! coordinate-frame conversions shared by the mechanization, the sensor
//! models and the filters.
//!
//! Conventions: latitude/longitude/attitude in radians, depth in meters
//! positive down (so height above the ellipsoid is `-Z`), NED navigation
//! frame, ZYX (yaw-pitch-roll) Euler angles for the body-to-nav DCM.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;
use thiserror::Error;

/// Earth rotation rate, rad/s.
pub const EARTH_RATE: f64 = 7.2921150e-5;
/// WGS-84 semi-major axis, m.
pub const WGS84_SEMI_MAJOR: f64 = 6_378_137.0;
/// WGS-84 first eccentricity.
pub const WGS84_ECCENTRICITY: f64 = 0.0818191908425;
/// Standard gravity, m/s^2, applied along NED down.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Pitch magnitudes beyond this are rejected as gimbal lock.
pub const GIMBAL_GUARD: f64 = 85.0 * PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesyError {
    #[error("pitch {0} rad exceeds the gimbal-lock guard")]
    GimbalLock(f64),
    #[error("latitude {0} rad out of (-pi/2, pi/2)")]
    InvalidLatitude(f64),
}

/// Reference ellipsoid plus rotation rate and gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    /// Earth rotation rate, rad/s.
    pub omega: f64,
    /// Semi-major axis, m.
    pub semi_major: f64,
    /// First eccentricity.
    pub eccentricity: f64,
    /// Gravity magnitude, m/s^2, NED down.
    pub gravity: f64,
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel {
            omega: EARTH_RATE,
            semi_major: WGS84_SEMI_MAJOR,
            eccentricity: WGS84_ECCENTRICITY,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl EarthModel {
    /// Meridian and transverse curvature radii `(R_M, R_N)` at a latitude.
    pub fn curvature_radii(&self, lat: f64) -> (f64, f64) {
        let e2 = self.eccentricity * self.eccentricity;
        let s = lat.sin();
        let w2 = 1.0 - e2 * s * s;
        let w = w2.sqrt();
        let r_n = self.semi_major / w;
        let r_m = self.semi_major * (1.0 - e2) / (w2 * w);
        (r_m, r_n)
    }

    /// Earth rotation rate resolved in the NED frame.
    pub fn earth_rate_nav(&self, lat: f64) -> Vector3<f64> {
        Vector3::new(self.omega * lat.cos(), 0.0, -self.omega * lat.sin())
    }

    /// Transport rate of the NED frame for a vehicle at `(lat, depth)`
    /// moving with NED velocity `vel`.
    pub fn transport_rate(&self, lat: f64, depth: f64, vel: &Vector3<f64>) -> Vector3<f64> {
        let (r_m, r_n) = self.curvature_radii(lat);
        Vector3::new(
            vel.y / (r_n + depth),
            -vel.x / (r_m + depth),
            -vel.y * lat.tan() / (r_n + depth),
        )
    }
}

/// Position in the geodetic frame: latitude, longitude (rad) and depth
/// (m, positive down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticPosition {
    pub lat: f64,
    pub lon: f64,
    pub depth: f64,
}

impl GeodeticPosition {
    pub fn new(lat: f64, lon: f64, depth: f64) -> Self {
        GeodeticPosition { lat, lon: wrap_angle(lon), depth }
    }
}

/// Roll, pitch, yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Attitude {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Attitude { roll: wrap_angle(roll), pitch, yaw: wrap_angle(yaw) }
    }

    pub fn check_gimbal(&self) -> Result<(), GeodesyError> {
        if self.pitch.abs() > GIMBAL_GUARD {
            Err(GeodesyError::GimbalLock(self.pitch))
        } else {
            Ok(())
        }
    }
}

/// Body-to-navigation direction cosine matrix from ZYX Euler angles.
pub fn dcm_body_to_nav(att: &Attitude) -> Matrix3<f64> {
    let (sp, cp) = att.roll.sin_cos();
    let (st, ct) = att.pitch.sin_cos();
    let (sy, cy) = att.yaw.sin_cos();
    Matrix3::new(
        ct * cy, -cp * sy + sp * st * cy, sp * sy + cp * st * cy,
        ct * sy, cp * cy + sp * st * sy, -sp * cy + cp * st * sy,
        -st, sp * ct, cp * ct,
    )
}

/// Euler-rate to body-rate matrix: `omega_b = Omega * [roll_dot pitch_dot yaw_dot]`.
pub fn euler_rate_matrix(att: &Attitude) -> Matrix3<f64> {
    let (sp, cp) = att.roll.sin_cos();
    let (st, ct) = att.pitch.sin_cos();
    Matrix3::new(
        1.0, 0.0, -st,
        0.0, cp, sp * ct,
        0.0, -sp, cp * ct,
    )
}

/// Geodetic position to ECEF, standard ellipsoid conversion with
/// height `h = -depth`.
pub fn geodetic_to_ecef(p: &GeodeticPosition, earth: &EarthModel) -> Vector3<f64> {
    let e2 = earth.eccentricity * earth.eccentricity;
    let (_, r_n) = earth.curvature_radii(p.lat);
    let h = -p.depth;
    let (sl, cl) = p.lat.sin_cos();
    let (so, co) = p.lon.sin_cos();
    Vector3::new(
        (r_n + h) * cl * co,
        (r_n + h) * cl * so,
        (r_n * (1.0 - e2) + h) * sl,
    )
}

/// ECEF-to-NED rotation at a reference geodetic point.
pub fn ecef_to_ned_rotation(reference: &GeodeticPosition) -> Matrix3<f64> {
    let (sl, cl) = reference.lat.sin_cos();
    let (so, co) = reference.lon.sin_cos();
    Matrix3::new(
        -sl * co, -sl * so, cl,
        -so, co, 0.0,
        -cl * co, -cl * so, -sl,
    )
}

/// ECEF point to local NED coordinates relative to a reference point.
pub fn ecef_to_ned(p_ecef: &Vector3<f64>, reference: &GeodeticPosition, earth: &EarthModel) -> Vector3<f64> {
    let origin = geodetic_to_ecef(reference, earth);
    ecef_to_ned_rotation(reference) * (p_ecef - origin)
}

/// Geodetic point straight to NED relative to a reference point.
pub fn geodetic_to_ned(p: &GeodeticPosition, reference: &GeodeticPosition, earth: &EarthModel) -> Vector3<f64> {
    ecef_to_ned(&geodetic_to_ecef(p, earth), reference, earth)
}

/// NED point back to geodetic via the reference point.
pub fn ned_to_geodetic(p_ned: &Vector3<f64>, reference: &GeodeticPosition, earth: &EarthModel) -> GeodeticPosition {
    let origin = geodetic_to_ecef(reference, earth);
    let p_ecef = origin + ecef_to_ned_rotation(reference).transpose() * p_ned;
    ecef_to_geodetic(&p_ecef, earth)
}

/// ECEF back to geodetic by fixed-point iteration on the latitude.
pub fn ecef_to_geodetic(p: &Vector3<f64>, earth: &EarthModel) -> GeodeticPosition {
    let e2 = earth.eccentricity * earth.eccentricity;
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let lon = p.y.atan2(p.x);
    let mut lat = p.z.atan2(rho * (1.0 - e2));
    let mut h = 0.0;
    for _ in 0..50 {
        let (_, r_n) = earth.curvature_radii(lat);
        h = rho / lat.cos() - r_n;
        let next = p.z.atan2(rho * (1.0 - e2 * r_n / (r_n + h)));
        if next == lat {
            break;
        }
        lat = next;
    }
    // Newton polish against the forward map: the fixed point above solves
    // the ideal ellipsoid relation, which differs from the rounded
    // `geodetic_to_ecef` by a few ulps of the Earth radius. Projecting the
    // forward residual onto the local up/north directions removes that
    // bias and leaves the round trip at the rounding noise of a single
    // forward evaluation.
    for _ in 0..2 {
        let fwd = geodetic_to_ecef(&GeodeticPosition { lat, lon, depth: -h }, earth);
        let d = p - fwd;
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        let up = Vector3::new(cl * co, cl * so, sl);
        let north = Vector3::new(-sl * co, -sl * so, cl);
        let (r_m, _) = earth.curvature_radii(lat);
        h += d.dot(&up);
        lat += d.dot(&north) / (r_m + h);
    }
    GeodeticPosition { lat, lon, depth: -h }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn curvature_radii_at_equator() {
        let earth = EarthModel::default();
        let (r_m, r_n) = earth.curvature_radii(0.0);
        assert_abs_diff_eq!(r_n, WGS84_SEMI_MAJOR, epsilon = 1e-6);
        let e2 = WGS84_ECCENTRICITY * WGS84_ECCENTRICITY;
        assert_abs_diff_eq!(r_m, WGS84_SEMI_MAJOR * (1.0 - e2), epsilon = 1e-6);
        // ~6 335 439 m with eps^2 = 0.00669437999
        assert!((r_m - 6_335_439.0).abs() < 1.0);
    }

    #[test]
    fn curvature_radii_at_pole() {
        let earth = EarthModel::default();
        let lat = PI / 2.0 - 1e-12;
        let (r_m, r_n) = earth.curvature_radii(lat);
        let e2 = WGS84_ECCENTRICITY * WGS84_ECCENTRICITY;
        let expected = WGS84_SEMI_MAJOR / (1.0 - e2).sqrt();
        assert_abs_diff_eq!(r_n, expected, epsilon = 1e-3);
        assert_abs_diff_eq!(r_m, r_n, epsilon = 1e-3);
        assert!((expected - 6_399_594.0).abs() < 1.0);
    }

    #[test]
    fn dcm_zero_attitude_is_identity() {
        let c = dcm_body_to_nav(&Attitude::new(0.0, 0.0, 0.0));
        assert!((c - Matrix3::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn dcm_yaw_quarter_turn_maps_x_to_east() {
        let c = dcm_body_to_nav(&Attitude::new(0.0, 0.0, PI / 2.0));
        let col = c * Vector3::x();
        assert_abs_diff_eq!(col.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col.y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn earth_rate_at_equator() {
        let earth = EarthModel::default();
        let w = earth.earth_rate_nav(0.0);
        assert_eq!(w, Vector3::new(EARTH_RATE, 0.0, 0.0));
    }

    #[test]
    fn transport_rate_zero_velocity() {
        let earth = EarthModel::default();
        let w = earth.transport_rate(0.3, 50.0, &Vector3::zeros());
        assert_eq!(w, Vector3::zeros());
    }

    #[test]
    fn transport_rate_closed_form() {
        let earth = EarthModel::default();
        let lat = 18.946_f64.to_radians();
        let (r_m, r_n) = earth.curvature_radii(lat);
        let v = Vector3::new(0.0, 5.144, 0.0);
        let w = earth.transport_rate(lat, 50.0, &v);
        assert_abs_diff_eq!(w.x, 5.144 / (r_n + 50.0), epsilon = 1e-18);
        assert_abs_diff_eq!(w.y, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(w.z, -5.144 * lat.tan() / (r_n + 50.0), epsilon = 1e-18);
        let _ = r_m;
    }

    #[test]
    fn ecef_at_origin() {
        let earth = EarthModel::default();
        let p = geodetic_to_ecef(&GeodeticPosition::new(0.0, 0.0, 0.0), &earth);
        assert_abs_diff_eq!(p.x, WGS84_SEMI_MAJOR, epsilon = 1e-6);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn ned_self_reference_is_zero() {
        let earth = EarthModel::default();
        let p = GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 50.0);
        let ned = geodetic_to_ned(&p, &p, &earth);
        assert!(ned.norm() < 1e-9);
    }

    #[test]
    fn ecef_scalar_evaluation() {
        // Independent scalar evaluation of the closed form at the scenario point.
        let earth = EarthModel::default();
        let lat = 18.946_f64.to_radians();
        let lon = 72.854_f64.to_radians();
        let depth = 50.0;
        let p = geodetic_to_ecef(&GeodeticPosition::new(lat, lon, depth), &earth);
        let e2 = WGS84_ECCENTRICITY * WGS84_ECCENTRICITY;
        let rn = WGS84_SEMI_MAJOR / (1.0 - e2 * lat.sin() * lat.sin()).sqrt();
        let h = -depth;
        assert_abs_diff_eq!(p.x, (rn + h) * lat.cos() * lon.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, (rn + h) * lat.cos() * lon.sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(p.z, (rn * (1.0 - e2) + h) * lat.sin(), epsilon = 1e-9);
    }

    #[test]
    fn wrap_angle_cases() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(0.1), 0.1, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn dcm_is_proper_rotation(roll in -3.1..3.1f64, pitch in -1.4..1.4f64, yaw in -3.1..3.1f64) {
            let c = dcm_body_to_nav(&Attitude::new(roll, pitch, yaw));
            let err = (c * c.transpose() - Matrix3::identity()).abs().max();
            prop_assert!(err < 1e-12);
            prop_assert!((c.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn transverse_radius_monotone(a in 0.0..1.5f64, b in 0.0..1.5f64) {
            let earth = EarthModel::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(earth.curvature_radii(lo).1 <= earth.curvature_radii(hi).1 + 1e-9);
        }

        #[test]
        fn ecef_ned_round_trip(dn in -10_000.0..10_000.0f64, de in -10_000.0..10_000.0f64, dd in -200.0..200.0f64) {
            let earth = EarthModel::default();
            let reference = GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 0.0);
            let origin = geodetic_to_ecef(&reference, &earth);
            let rot = ecef_to_ned_rotation(&reference);
            let p = origin + rot.transpose() * Vector3::new(dn, de, dd);
            let back = origin + rot.transpose() * ecef_to_ned(&p, &reference, &earth);
            prop_assert!((back - p).norm() < 1e-9);
        }

        #[test]
        fn geodetic_ned_round_trip(dlat in -0.01..0.01f64, dlon in -0.01..0.01f64, depth in 0.0..200.0f64) {
            // Depth recovery cancels terms of Earth-radius magnitude, so
            // the attainable accuracy is a few ulps of 6.4e6 m.
            let earth = EarthModel::default();
            let reference = GeodeticPosition::new(18.946_f64.to_radians(), 72.854_f64.to_radians(), 0.0);
            let p = GeodeticPosition::new(reference.lat + dlat, reference.lon + dlon, depth);
            let ned = geodetic_to_ned(&p, &reference, &earth);
            let back = ned_to_geodetic(&ned, &reference, &earth);
            let err = geodetic_to_ned(&back, &reference, &earth) - ned;
            prop_assert!(err.norm() < 1e-8);
        }

        #[test]
        fn wrap_angle_idempotent(a in -100.0..100.0f64) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI - 1e-15 && w <= PI + 1e-15);
            prop_assert!((wrap_angle(w) - w).abs() < 1e-12);
        }
    }
}
