//! Reference schemes: no RIS, and an RIS with random phases.

use std::f64::consts::PI;

use rand::Rng;

use super::Scenario;
use crate::channel::ChannelSet;
use crate::linalg::CMat;
use crate::multi::mrr_mrt_beamformer;
use crate::system::{min_snr, optimal_tau, snr_pair_single, Beamformer, Combined, PhaseShifts, Power};
use crate::Result;

/// A benchmark design and its smaller user SNR (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDesign {
    pub phi: PhaseShifts,
    pub beamformer: Beamformer,
    pub min_snr: f64,
}

fn relay_for(c: &Combined, pw: &Power, scenario: Scenario) -> Result<(Beamformer, f64)> {
    match scenario {
        Scenario::SingleAntenna => {
            let tau = optimal_tau(c, pw)?;
            let (g1, g2) = snr_pair_single(c, tau, pw);
            Ok((Beamformer::Scalar { tau }, g1.min(g2)))
        }
        Scenario::MultiAntenna => {
            let a: CMat = mrr_mrt_beamformer(c, pw)?;
            let s = min_snr(c, &a, pw);
            Ok((Beamformer::Matrix(a), s))
        }
    }
}

/// Relay designed on the direct links only, as if the RIS were absent.
pub fn benchmark_no_ris(ch: &ChannelSet, pw: &Power, scenario: Scenario) -> Result<BenchmarkDesign> {
    let (beamformer, min_snr) = relay_for(&Combined::direct(ch), pw, scenario)?;
    Ok(BenchmarkDesign { phi: PhaseShifts::identity(0), beamformer, min_snr })
}

/// Phases drawn uniformly from `[0, 2π)`, relay matched to the result.
pub fn benchmark_random_phase<R: Rng + ?Sized>(
    ch: &ChannelSet,
    pw: &Power,
    scenario: Scenario,
    rng: &mut R,
) -> Result<BenchmarkDesign> {
    let angles: Vec<f64> = (0..ch.n()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let phi = PhaseShifts::from_angles(&angles);
    let (beamformer, min_snr) = relay_for(&Combined::new(ch, &phi), pw, scenario)?;
    Ok(BenchmarkDesign { phi, beamformer, min_snr })
}
