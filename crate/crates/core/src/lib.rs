//! Crater-based terrain-absolute navigation for lunar descent.
//!
//! The crate simulates a spacecraft falling toward a spherical Moon, synthesizes
//! range and line-of-sight observations of catalogued craters through a simple
//! pinhole-pyramid camera, and recovers the spacecraft pose from them:
//!
//! - [`frames`]: MCI / MCMF / selenographic / orbit / body frames, quaternion and DCM algebra
//! - [`dynamics`]: point-mass two-body propagation with RK4 and a nadir-locked attitude
//! - [`catalog`]: crater database ingestion, synthetic catalogs and region queries
//! - [`sensor`]: camera footprint, diameter visibility, identification and measurement noise
//! - [`estimator`]: Gauss-Newton range multilateration and QUEST attitude
//! - [`scenario`]: descent runs, error series, RMSE windows and crater-limit sweeps
//! - [`cli`]: the `craternav` command-line front end
//!
//! Quaternions are scalar-first with the Hamilton product. `q_ib` rotates
//! body-frame coordinates into inertial coordinates: `q_ib.to_dcm()` is `R_ib`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod frames;
pub mod io;
pub mod plot;
pub mod scenario;
pub mod sensor;

pub use error::{Error, Result};
pub use frames::{Dcm, MoonConstants, Quaternion, SelenographicPoint, Vec3};

/// Version string recorded in run manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
