//! Channel realizations for the BS / RIS / two-user geometry.
//!
//! Direct BS↔user links are Rayleigh with the NLoS path-loss branch; the
//! BS↔RIS matrix and the RIS↔user vectors are Rician with the LoS branch
//! and planar-array steering vectors on the RIS side.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, CMat, CVec, C64};
use crate::{Error, Result};

// Independent RNG streams per channel component. Keeping them separate
// makes realizations nest: growing N_v (with N_h fixed) or M only appends
// entries and never reshuffles the ones already drawn.
const STREAM_ANGLES: u64 = 1;
const STREAM_H1: u64 = 2;
const STREAM_H2: u64 = 3;
const STREAM_G1: u64 = 4;
const STREAM_G2: u64 = 5;
const STREAM_V_ROW0: u64 = 100;

const MAX_ELEVATION_DEG: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    /// User 1 to RIS distance in metres.
    pub d_1r: f64,
    /// User 2 to RIS distance in metres.
    pub d_2r: f64,
    /// BS to RIS distance in metres.
    pub d_br: f64,
    pub gain_bs_dbi: f64,
    pub gain_ris_dbi: f64,
    pub gain_user_dbi: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            d_1r: 40.0,
            d_2r: 60.0,
            d_br: 80.0,
            gain_bs_dbi: 5.0,
            gain_ris_dbi: 5.0,
            gain_user_dbi: 0.0,
            carrier_hz: 2.5e9,
            bandwidth_hz: 180e3,
        }
    }
}

impl Geometry {
    /// BS to user 1 distance; the users sit on a line perpendicular to
    /// the BS–RIS segment at the RIS.
    pub fn d_b1(&self) -> f64 {
        self.d_1r.hypot(self.d_br)
    }

    pub fn d_b2(&self) -> f64 {
        self.d_2r.hypot(self.d_br)
    }

    pub fn validate(&self) -> Result<()> {
        let dists = [self.d_1r, self.d_2r, self.d_br];
        if dists.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidParameter(format!("distances must be positive, got {dists:?}")));
        }
        if !(self.bandwidth_hz > 0.0) || !(self.carrier_hz > 0.0) {
            return Err(Error::InvalidParameter("carrier and bandwidth must be positive".into()));
        }
        Ok(())
    }
}

/// Linear Rician factors. `f64::INFINITY` gives a pure line-of-sight link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rician {
    pub k_v: f64,
    pub k_1: f64,
    pub k_2: f64,
}

impl Default for Rician {
    fn default() -> Self {
        Rician { k_v: 10.0, k_1: 10.0, k_2: 10.0 }
    }
}

impl Rician {
    pub fn validate(&self) -> Result<()> {
        for k in [self.k_v, self.k_1, self.k_2] {
            if k.is_nan() || k < 0.0 {
                return Err(Error::InvalidParameter(format!("Rician factor must be >= 0, got {k}")));
            }
        }
        Ok(())
    }
}

/// (LoS weight, NLoS weight) of a Rician mixture.
fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    /// BS antenna count.
    pub m: usize,
    /// RIS elements per row.
    pub n_h: usize,
    /// RIS rows.
    pub n_v: usize,
    /// Element spacing in wavelengths.
    pub spacing_over_lambda: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig { m: 4, n_h: 10, n_v: 10, spacing_over_lambda: 0.5 }
    }
}

impl ArrayConfig {
    pub fn n(&self) -> usize {
        self.n_h * self.n_v
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        if !(self.spacing_over_lambda > 0.0) {
            return Err(Error::InvalidParameter("element spacing must be positive".into()));
        }
        Ok(())
    }
}

/// RIS steering vector for azimuth `theta` and elevation `psi`: the
/// Kronecker product of the vertical and horizontal array responses, so
/// element (row v, column h) sits at index `v * n_h + h`.
pub fn steering_vector_ris(theta: f64, psi: f64, cfg: &ArrayConfig) -> CVec {
    let k = 2.0 * PI * cfg.spacing_over_lambda;
    let ph = -k * psi.cos() * theta.sin();
    let pv = k * psi.cos() * theta.cos();
    CVec::from_fn(cfg.n(), |idx, _| {
        let v = (idx / cfg.n_h) as f64;
        let h = (idx % cfg.n_h) as f64;
        cis(pv * v) * cis(ph * h)
    })
}

/// Steering vector of a horizontal uniform linear array at the BS.
pub fn steering_vector_bs(theta: f64, m: usize, spacing_over_lambda: f64) -> CVec {
    let k = -2.0 * PI * spacing_over_lambda * theta.sin();
    CVec::from_fn(m, |i, _| cis(k * i as f64))
}

/// Large-scale path gain in dB (negative for a loss), urban-micro model.
pub fn path_loss_db(distance: f64, los: bool, gt_dbi: f64, gr_dbi: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidParameter(format!("distance must be positive, got {distance}")));
    }
    let base = if los {
        -35.95 - 22.0 * distance.log10()
    } else {
        -33.05 - 36.7 * distance.log10()
    };
    Ok(gt_dbi + gr_dbi + base)
}

fn path_gain(distance: f64, los: bool, gt: f64, gr: f64) -> Result<f64> {
    Ok(crate::from_db(path_loss_db(distance, los, gt, gr)?))
}

/// One realization of all five channels, plus the stacked matrices
/// `Ḡ_k = [V·diag(g_k), h_k]` so that `Ḡ_k·[φ; 1] = h_k + V·diag(g_k)·φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h1: CVec,
    pub h2: CVec,
    pub g1: CVec,
    pub g2: CVec,
    /// BS–RIS channel, M×N.
    pub v: CMat,
    pub g1_bar: CMat,
    pub g2_bar: CMat,
}

impl ChannelSet {
    pub fn from_parts(h1: CVec, h2: CVec, g1: CVec, g2: CVec, v: CMat) -> Result<Self> {
        let (m, n) = v.shape();
        if h1.len() != m || h2.len() != m || g1.len() != n || g2.len() != n {
            return Err(Error::Dimension(format!(
                "h: {}/{}, g: {}/{}, V: {m}x{n}",
                h1.len(),
                h2.len(),
                g1.len(),
                g2.len()
            )));
        }
        let stack = |g: &CVec, h: &CVec| {
            let mut out = CMat::zeros(m, n + 1);
            for j in 0..n {
                for i in 0..m {
                    out[(i, j)] = v[(i, j)] * g[j];
                }
            }
            out.set_column(n, h);
            out
        };
        let g1_bar = stack(&g1, &h1);
        let g2_bar = stack(&g2, &h2);
        Ok(ChannelSet { h1, h2, g1, g2, v, g1_bar, g2_bar })
    }

    pub fn m(&self) -> usize {
        self.v.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.ncols()
    }

    /// The same realization with the RIS removed (N = 0).
    pub fn without_ris(&self) -> ChannelSet {
        let m = self.m();
        ChannelSet::from_parts(
            self.h1.clone(),
            self.h2.clone(),
            CVec::zeros(0),
            CVec::zeros(0),
            CMat::zeros(m, 0),
        )
        .expect("shapes are consistent")
    }
}

/// Full description of the propagation environment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    pub geometry: Geometry,
    pub rician: Rician,
    pub array: ArrayConfig,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> CVec {
    DVector::from_fn(len, |_, _| complex_gaussian(rng))
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.rician.validate()?;
        self.array.validate()
    }

    /// Draws one realization. Identical seeds give identical channels.
    pub fn sample(&self, seed: u64) -> Result<ChannelSet> {
        self.validate()?;
        let geo = &self.geometry;
        let arr = &self.array;
        let (m, n) = (arr.m, arr.n());

        let mut ang = stream_rng(seed, STREAM_ANGLES);
        let max_el = MAX_ELEVATION_DEG.to_radians();
        let mut azimuth = || ang.random_range(-PI..=PI);
        let theta_bs = azimuth();
        let theta_ris_tx = azimuth();
        let theta_u1 = azimuth();
        let theta_u2 = azimuth();
        let psi_ris_tx = ang.random_range(-max_el..=max_el);
        let psi_u1 = ang.random_range(-max_el..=max_el);
        let psi_u2 = ang.random_range(-max_el..=max_el);

        let eta_h1 = path_gain(geo.d_b1(), false, geo.gain_bs_dbi, geo.gain_user_dbi)?;
        let eta_h2 = path_gain(geo.d_b2(), false, geo.gain_bs_dbi, geo.gain_user_dbi)?;
        let eta_v = path_gain(geo.d_br, true, geo.gain_bs_dbi, geo.gain_ris_dbi)?;
        let eta_g1 = path_gain(geo.d_1r, true, geo.gain_ris_dbi, geo.gain_user_dbi)?;
        let eta_g2 = path_gain(geo.d_2r, true, geo.gain_ris_dbi, geo.gain_user_dbi)?;

        let h1 = gaussian_vec(&mut stream_rng(seed, STREAM_H1), m) * C64::from(eta_h1.sqrt());
        let h2 = gaussian_vec(&mut stream_rng(seed, STREAM_H2), m) * C64::from(eta_h2.sqrt());

        let rician_vec = |stream: u64, k: f64, eta: f64, theta: f64, psi: f64| {
            let (wl, wn) = rician_weights(k);
            let los = steering_vector_ris(theta, psi, arr).conjugate();
            let nlos = gaussian_vec(&mut stream_rng(seed, stream), n);
            (los * C64::from(wl) + nlos * C64::from(wn)) * C64::from(eta.sqrt())
        };
        let g1 = rician_vec(STREAM_G1, self.rician.k_1, eta_g1, theta_u1, psi_u1);
        let g2 = rician_vec(STREAM_G2, self.rician.k_2, eta_g2, theta_u2, psi_u2);

        let a_b = steering_vector_bs(theta_bs, m, arr.spacing_over_lambda);
        let a_r = steering_vector_ris(theta_ris_tx, psi_ris_tx, arr);
        let (wl, wn) = rician_weights(self.rician.k_v);
        let mut v = DMatrix::zeros(m, n);
        for i in 0..m {
            let mut rng = stream_rng(seed, STREAM_V_ROW0 + i as u64);
            for j in 0..n {
                let los = a_b[i].conj() * a_r[j];
                v[(i, j)] = (los * wl + complex_gaussian(&mut rng) * wn) * eta_v.sqrt();
            }
        }
        ChannelSet::from_parts(h1, h2, g1, g2, v)
    }
}
