//! Phase optimisation for a single-antenna relay: SUM (maximise the
//! smaller SNR upper bound) and GSM (successive refinement of the true
//! SNR through per-generation scaling factors).

use rand::Rng;

use crate::channel::ChannelSet;
use crate::linalg::CVec;
use crate::sdp::randomize::{project_unit_modulus, Randomized};
use crate::sdp::{
    self, extract_phases, gaussian_randomization, ConstraintMatrix, RandomizationConfig, SdpProblem, SdpStatus,
    Sense, SolverConfig,
};
use crate::system::{optimal_tau, snr_pair_single, Combined, PhaseShifts, Power};
use crate::{Error, Result};

/// Which design the GSM scaling factors are evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Best design found so far.
    #[default]
    Incumbent,
    /// Design produced by the immediately preceding generation.
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GsmConfig {
    /// Number of refinement generations after the SUM seed.
    pub generations: usize,
    pub reference: Reference,
}

impl Default for GsmConfig {
    fn default() -> Self {
        GsmConfig { generations: 3, reference: Reference::Incumbent }
    }
}

/// Settings shared by every optimisation routine.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub solver: SolverConfig,
    pub randomization: RandomizationConfig,
    pub gsm: GsmConfig,
    pub bisection: crate::multi::BisectionConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleDesign {
    pub phi: PhaseShifts,
    pub tau: f64,
    /// Smaller of the two user SNRs (linear).
    pub min_snr: f64,
}

impl SingleDesign {
    /// Design with the power-budget amplifier for the given phases.
    pub fn for_phases(ch: &ChannelSet, phi: PhaseShifts, pw: &Power) -> Result<Self> {
        let c = Combined::new(ch, &phi);
        let tau = optimal_tau(&c, pw)?;
        let (g1, g2) = snr_pair_single(&c, tau, pw);
        Ok(SingleDesign { phi, tau, min_snr: g1.min(g2) })
    }

    pub fn min_snr_db(&self) -> f64 {
        crate::to_db(self.min_snr)
    }
}

fn check_single(ch: &ChannelSet) -> Result<()> {
    if ch.m() != 1 {
        return Err(Error::Dimension(format!("single-antenna routine called with M = {}", ch.m())));
    }
    Ok(())
}

/// `max t s.t. diag(Ψ) = 1, Ψ ⪰ 0, tr(Ψ Ḡ_k^H Ḡ_k) ≥ w_k t`, then Gaussian
/// randomisation. Works for any M; `weights = (1, 1)` is the SNR-upper-bound
/// phase step.
pub(crate) fn weighted_phase_sdp<R, E>(
    u1: crate::linalg::CMat,
    u2: crate::linalg::CMat,
    weights: (f64, f64),
    cfg: &OptConfig,
    rng: &mut R,
    evaluate: E,
) -> Result<(PhaseShifts, Randomized, f64)>
where
    R: Rng + ?Sized,
    E: FnMut(&CVec) -> f64,
{
    let dim = u1.nrows();
    let mut prob = SdpProblem::new(dim, true);
    prob.push(ConstraintMatrix::LowRank(u1), Sense::Geq, 0.0, weights.0);
    prob.push(ConstraintMatrix::LowRank(u2), Sense::Geq, 0.0, weights.1);
    let sol = sdp::solve(&prob, &cfg.solver)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::SolverFailed(sol.message));
    }
    // A max-iteration result is still a usable PSD matrix for randomisation.
    let r = gaussian_randomization(&sol.x_mat, &cfg.randomization, rng, project_unit_modulus, evaluate)?;
    let phi = extract_phases(&r.vector)?;
    Ok((phi, r, sol.t_opt))
}

/// Phases maximising `min_k ‖Ḡ_k φ̄‖²`, the SNR upper-bound surrogate.
/// Returns the phases and the relaxation optimum.
pub fn sum_phase<R: Rng + ?Sized>(ch: &ChannelSet, cfg: &OptConfig, rng: &mut R) -> Result<(PhaseShifts, f64)> {
    if ch.n() == 0 {
        return Ok((PhaseShifts::identity(0), f64::NAN));
    }
    let g1 = ch.g1_bar.clone();
    let g2 = ch.g2_bar.clone();
    let eval = |v: &CVec| (&g1 * v).norm_squared().min((&g2 * v).norm_squared());
    let (phi, _, t) = weighted_phase_sdp(ch.g1_bar.adjoint(), ch.g2_bar.adjoint(), (1.0, 1.0), cfg, rng, eval)?;
    Ok((phi, t))
}

/// SUM for a single-antenna relay.
pub fn sum_single<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<SingleDesign> {
    check_single(ch)?;
    let (phi, _) = sum_phase(ch, cfg, rng)?;
    SingleDesign::for_phases(ch, phi, pw)
}

/// Scaling factors `(η1, η2)` with `γ1 = β|h̃2|²/η1` and `γ2 = β|h̃1|²/η2`
/// under the power-budget amplifier.
pub fn gsm_eta(c: &Combined, pw: &Power) -> Result<(f64, f64)> {
    if c.h1.len() != 1 {
        return Err(Error::Dimension("scaling factors need M = 1".into()));
    }
    let a1 = c.h1[0].norm_sqr();
    let a2 = c.h2[0].norm_sqr();
    if a1 == 0.0 || a2 == 0.0 {
        return Err(Error::Numerical("combined channel is zero".into()));
    }
    let base = 1.0 + pw.p_s / pw.p_b;
    let eta1 = base + (pw.p_s * a2 + pw.sigma2) / (pw.p_b * a1);
    let eta2 = base + (pw.p_s * a1 + pw.sigma2) / (pw.p_b * a2);
    Ok((eta1, eta2))
}

/// GSM for a single-antenna relay, seeded with SUM.
pub fn gsm_single<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<SingleDesign> {
    let seed = sum_single(ch, pw, cfg, rng)?;
    gsm_single_from_seed(ch, pw, cfg, seed, rng)
}

/// GSM generations starting from an existing design. The result is never
/// worse than `seed`.
pub fn gsm_single_from_seed<R: Rng + ?Sized>(
    ch: &ChannelSet,
    pw: &Power,
    cfg: &OptConfig,
    seed: SingleDesign,
    rng: &mut R,
) -> Result<SingleDesign> {
    check_single(ch)?;
    if ch.n() == 0 {
        return Ok(seed);
    }
    let mut best = seed.clone();
    let mut reference = seed;
    for _ in 0..cfg.gsm.generations {
        let c = Combined::new(ch, &reference.phi);
        let Ok((eta1, eta2)) = gsm_eta(&c, pw) else { break };
        let g1 = ch.g1_bar.clone();
        let g2 = ch.g2_bar.clone();
        let eval = |v: &CVec| ((&g2 * v).norm_squared() / eta1).min((&g1 * v).norm_squared() / eta2);
        let step = weighted_phase_sdp(ch.g1_bar.adjoint(), ch.g2_bar.adjoint(), (eta2, eta1), cfg, rng, eval);
        let Ok((phi, _, _)) = step else { continue };
        let design = SingleDesign::for_phases(ch, phi, pw)?;
        if design.min_snr > best.min_snr {
            best = design.clone();
        }
        reference = match cfg.gsm.reference {
            Reference::Incumbent => best.clone(),
            Reference::Previous => design,
        };
    }
    Ok(best)
}
