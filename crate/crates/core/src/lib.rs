//! Square-root nonlinear state estimation for underwater navigation.
//!
//! The crate bundles three pieces:
//!
//! - deterministic point-set Kalman filters in square-root form
//!   (unscented, cubature and second-order polynomial chaos), each with a
//!   maximum-correntropy measurement update for heavy-tailed noise;
//! - a nine-state strapdown navigation simulator: truth trajectory
//!   generation from a stage schedule, inertial sensor synthesis and
//!   velocity/depth/attitude/position measurements with Gaussian mixture
//!   noise, including acoustic beacon triangulation;
//! - a Monte-Carlo benchmark harness with error metrics and per-step
//!   floating-point operation counts.

pub mod dynamics;
pub mod filters;
pub mod harness;
pub mod geodesy;
pub mod mcc;
pub mod sensors;
