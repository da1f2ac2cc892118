//! Signal-level quantities of the two-way relay link: combined channels,
//! post-cancellation SNRs, relay transmit power and the single-antenna
//! amplifier.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::linalg::{cis, CMat, CVec, C64};
use crate::{Error, Result};

/// Unit-modulus RIS coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts {
    phi: CVec,
}

impl PhaseShifts {
    /// Validates that every entry has unit modulus (to 1e-9).
    pub fn new(phi: CVec) -> Result<Self> {
        if let Some(z) = phi.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidParameter(format!("phase shift {z} is not unit-modulus")));
        }
        Ok(PhaseShifts { phi })
    }

    /// Wraps a vector already known to be unit-modulus.
    pub(crate) fn from_unit(phi: CVec) -> Self {
        debug_assert!(phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        PhaseShifts { phi }
    }

    pub fn from_angles(theta: &[f64]) -> Self {
        PhaseShifts { phi: CVec::from_iterator(theta.len(), theta.iter().map(|&t| cis(t))) }
    }

    /// All-zero phases (every coefficient equal to one).
    pub fn identity(n: usize) -> Self {
        PhaseShifts { phi: CVec::from_element(n, C64::new(1.0, 0.0)) }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &CVec {
        &self.phi
    }

    /// `[φ; 1]`.
    pub fn phi_bar(&self) -> CVec {
        let n = self.phi.len();
        let mut out = CVec::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&self.phi);
        out[n] = C64::new(1.0, 0.0);
        out
    }
}

/// Relay processing: a power amplifier (single antenna) or an M×M matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Beamformer {
    Scalar { tau: f64 },
    Matrix(CMat),
}

impl Beamformer {
    /// Matrix form; the scalar amplifier becomes the 1×1 matrix `[√τ]`.
    pub fn as_matrix(&self) -> CMat {
        match self {
            Beamformer::Scalar { tau } => CMat::from_element(1, 1, C64::new(tau.sqrt(), 0.0)),
            Beamformer::Matrix(a) => a.clone(),
        }
    }
}

/// Transmit powers and noise, all in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    /// Per-user transmit power.
    pub p_s: f64,
    /// Relay power budget.
    pub p_b: f64,
    /// Noise power.
    pub sigma2: f64,
}

impl Power {
    pub fn new(p_s: f64, p_b: f64, sigma2: f64) -> Result<Self> {
        for (name, x) in [("p_s", p_s), ("p_b", p_b), ("sigma2", sigma2)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(Power { p_s, p_b, sigma2 })
    }

    /// Powers in dBm and thermal noise at -174 dBm/Hz over `bandwidth_hz`.
    pub fn from_dbm(p_s_dbm: f64, p_b_dbm: f64, bandwidth_hz: f64) -> Result<Self> {
        Power::new(
            crate::dbm_to_watts(p_s_dbm),
            crate::dbm_to_watts(p_b_dbm),
            crate::dbm_to_watts(noise_dbm(bandwidth_hz)),
        )
    }

    /// User transmit SNR `P_S / σ²`.
    pub fn beta(&self) -> f64 {
        self.p_s / self.sigma2
    }
}

/// Thermal noise power in dBm for the given bandwidth.
pub fn noise_dbm(bandwidth_hz: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10()
}

/// `h + V·diag(g)·φ`.
pub fn combined_channel(h: &CVec, v: &CMat, phi: &PhaseShifts, g: &CVec) -> CVec {
    let weighted = g.component_mul(phi.phi());
    h + v * weighted
}

/// Combined channels of both users for one phase configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub h1: CVec,
    pub h2: CVec,
}

impl Combined {
    pub fn new(ch: &ChannelSet, phi: &PhaseShifts) -> Self {
        assert_eq!(phi.len(), ch.n(), "phase vector length must equal the RIS size");
        Combined {
            h1: combined_channel(&ch.h1, &ch.v, phi, &ch.g1),
            h2: combined_channel(&ch.h2, &ch.v, phi, &ch.g2),
        }
    }

    /// Channels without any RIS contribution.
    pub fn direct(ch: &ChannelSet) -> Self {
        Combined { h1: ch.h1.clone(), h2: ch.h2.clone() }
    }
}

/// `xᵀ·A` as a column vector (i.e. `Aᵀx`).
fn row_times(x: &CVec, a: &CMat) -> CVec {
    a.tr_mul(x)
}

/// SNRs at user 1 and user 2 after self-interference cancellation:
/// `γ1 = β|h̃1ᵀAh̃2|² / (‖h̃1ᵀA‖² + 1)` and symmetrically for `γ2`.
pub fn snr_pair(c: &Combined, a: &CMat, pw: &Power) -> (f64, f64) {
    let beta = pw.beta();
    let r1 = row_times(&c.h1, a);
    let r2 = row_times(&c.h2, a);
    let s1 = r1.transpose() * &c.h2;
    let s2 = r2.transpose() * &c.h1;
    let g1 = beta * s1[(0, 0)].norm_sqr() / (r1.norm_squared() + 1.0);
    let g2 = beta * s2[(0, 0)].norm_sqr() / (r2.norm_squared() + 1.0);
    (g1, g2)
}

pub fn min_snr(c: &Combined, a: &CMat, pw: &Power) -> f64 {
    let (g1, g2) = snr_pair(c, a, pw);
    g1.min(g2)
}

/// Relay transmit power `P_S‖Ah̃1‖² + P_S‖Ah̃2‖² + σ² tr(AA^H)`.
pub fn bs_power(c: &Combined, a: &CMat, pw: &Power) -> f64 {
    pw.p_s * (a * &c.h1).norm_squared() + pw.p_s * (a * &c.h2).norm_squared() + pw.sigma2 * a.norm_squared()
}

/// Scales `a` so the relay meets its power budget with equality.
pub fn rescale_to_budget(c: &Combined, a: &CMat, pw: &Power) -> Option<CMat> {
    let p = bs_power(c, a, pw);
    if !(p > 0.0) || !p.is_finite() {
        return None;
    }
    Some(a * C64::from((pw.p_b / p).sqrt()))
}

/// Single-antenna amplifier that spends exactly the power budget.
pub fn optimal_tau(c: &Combined, pw: &Power) -> Result<f64> {
    if c.h1.len() != 1 {
        return Err(Error::Dimension(format!("scalar amplifier needs M = 1, got M = {}", c.h1.len())));
    }
    Ok(pw.p_b / (pw.p_s * c.h1[0].norm_sqr() + pw.p_s * c.h2[0].norm_sqr() + pw.sigma2))
}

/// Single-antenna SNRs for amplifier `tau`.
pub fn snr_pair_single(c: &Combined, tau: f64, pw: &Power) -> (f64, f64) {
    let beta = pw.beta();
    let a1 = c.h1[0].norm_sqr();
    let a2 = c.h2[0].norm_sqr();
    let prod = a1 * a2;
    (beta * tau * prod / (tau * a1 + 1.0), beta * tau * prod / (tau * a2 + 1.0))
}

/// Upper bounds `(β‖h̃2‖², β‖h̃1‖²)` on `(γ1, γ2)` that hold for every
/// beamformer.
pub fn snr_upper_bounds(c: &Combined, pw: &Power) -> (f64, f64) {
    (pw.beta() * c.h2.norm_squared(), pw.beta() * c.h1.norm_squared())
}
