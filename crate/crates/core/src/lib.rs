//! Beamforming for two-way relaying through a reconfigurable intelligent
//! surface (RIS).
//!
//! Two single-antenna users exchange data through an amplify-and-forward
//! base station, helped by a passive RIS. The crate provides:
//!
//! * [`channel`]: the spatially correlated Rician/Rayleigh channel model,
//! * [`system`]: effective channels, SNR and power expressions,
//! * [`sdp`]: a complex semidefinite-program interior-point solver and
//!   Gaussian randomisation,
//! * [`single`]: phase optimisation for a single-antenna base station,
//! * [`multi`]: joint phase/beamformer optimisation for a multi-antenna
//!   base station,
//! * [`sim`]: a Monte-Carlo harness with CSV output.

pub mod channel;
pub mod error;
pub mod linalg;
pub mod multi;
pub mod sdp;
pub mod sim;
pub mod single;
pub mod system;

pub use error::{Error, Result};

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear power ratio to dB.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dB to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
