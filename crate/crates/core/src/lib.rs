//! Magnetic-field-induced rotation of orbital-angular-momentum interference
//! patterns in warm atomic vapor.
//!
//! The crate covers the whole synthetic measurement chain:
//!
//! * [`oam_state`]: the vector-beam state and its `cos^2(l(theta + alpha))` fan pattern,
//! * [`nmor_model`]: pattern rotation angle versus longitudinal field,
//! * [`pattern_image`]: rasterization, camera noise and PGM interchange,
//! * [`rotation_estimator`]: coarse-to-fine correlation scan for the rotation angle,
//! * [`magnetometer`]: field inversion, precision and background-field calibration,
//! * [`cli`]: the `oamrot` command-line front end.
//!
//! ```
//! use oam_magnetometry::nmor_model::{rotation_angle, weak_field_slope, MediumParams};
//!
//! let params = MediumParams::rb87_d1(2);
//! let theta = rotation_angle(0.1, &params);
//! assert!((theta.to_degrees() / 0.1 - weak_field_slope(&params)).abs() < 1.0);
//! ```

pub mod cli;
pub mod error;
pub mod magnetometer;
pub mod nmor_model;
pub mod oam_state;
pub mod pattern_image;
pub mod rotation_estimator;

mod numeric;

pub use error::{Error, Result};
