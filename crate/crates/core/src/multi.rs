//! Joint RIS phase and relay beamformer design for a multi-antenna relay.
//!
//! Phases come from the SNR upper-bound SDP (SUM) or from the successive
//! refinement (GSM); the beamformer is either optimised by bisection over
//! the SNR level with a lifted SDP feasibility test (OB) or set to the
//! closed-form maximal-ratio receive/transmit matrix (MRB).

use rand::Rng;

use crate::channel::ChannelSet;
use crate::linalg::{kron, outer, unvec, CMat, CVec, C64};
use crate::sdp::{
    self, gaussian_randomization, ConstraintMatrix, Objective, SdpProblem, SdpSolution, SdpStatus, Sense,
};
use crate::single::{sum_phase, weighted_phase_sdp, OptConfig, Reference};
use crate::system::{bs_power, min_snr, rescale_to_budget, Combined, PhaseShifts, Power};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SumOb,
    SumMrb,
    GsmOb,
    GsmMrb,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BisectionConfig {
    /// Stop once the bracket is narrower than `q_tol` times the initial
    /// upper end.
    pub q_tol: f64,
    /// Margin on the analytic upper bound used as the initial upper end.
    pub upper_margin: f64,
    /// How many times the upper end may be doubled if it turns out feasible.
    pub max_widen: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig { q_tol: 1e-3, upper_margin: 0.01, max_widen: 8 }
    }
}

/// Quadratic forms of the SNR and power expressions in `a = vec(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrices {
    /// `a^H c1 a = |h̃1ᵀ A h̃2|²`.
    pub c1: CMat,
    /// `a^H d1 a = ‖h̃1ᵀ A‖²`.
    pub d1: CMat,
    pub c2: CMat,
    pub d2: CMat,
    /// `a^H f a` = relay transmit power.
    pub f: CMat,
}

fn gram(x: &CMat) -> CMat {
    x.adjoint() * x
}

/// Builds the lifted matrices for column-major `a = vec(A)`.
pub fn build_lifted(h1: &CVec, h2: &CVec, pw: &Power) -> LiftedMatrices {
    let m = h1.len();
    let eye = CMat::identity(m, m);
    let h1t = CMat::from_row_slice(1, m, h1.as_slice());
    let h2t = CMat::from_row_slice(1, m, h2.as_slice());
    let c1 = gram(&kron(&h2t, &h1t));
    let c2 = gram(&kron(&h1t, &h2t));
    let d1 = gram(&kron(&eye, &h1t));
    let d2 = gram(&kron(&eye, &h2t));
    let f = gram(&kron(&h1t, &eye)) * C64::from(pw.p_s)
        + gram(&kron(&h2t, &eye)) * C64::from(pw.p_s)
        + CMat::identity(m * m, m * m) * C64::from(pw.sigma2);
    LiftedMatrices { c1, d1, c2, d2, f }
}

/// Maximal-ratio receive / transmit beamformer scaled to the power budget.
pub fn mrr_mrt_beamformer(c: &Combined, pw: &Power) -> Result<CMat> {
    let a1 = (outer(&c.h2, &c.h1.conjugate()) + outer(&c.h1, &c.h2.conjugate())).conjugate();
    if a1.norm() == 0.0 {
        return Err(Error::Numerical("both combined channels vanish".into()));
    }
    rescale_to_budget(c, &a1, pw).ok_or_else(|| Error::Numerical("beamformer power is not finite".into()))
}

/// Result of the bisection beamformer search.
#[derive(Debug, Clone)]
pub struct ObOutcome {
    pub a: CMat,
    /// Bracket on the achievable min-SNR (linear) at termination.
    pub snr_low: f64,
    pub snr_up: f64,
    /// Number of feasibility SDPs solved.
    pub probes: usize,
    /// Probes whose solver result was inconclusive and counted as infeasible.
    pub inconclusive: usize,
    /// True if no level above zero was certified and the MRR-MRT matrix was used.
    pub fallback: bool,
}

/// Feasibility test at normalised level `q`: maximise the margin `t` of
/// `tr(Ξ(C_i − qD_i)) ≥ q·t` under `tr(ΞF) ≤ 1` and ask for `t ≥ 1`.
fn ob_probe(lm: &LiftedMatrices, q: f64, cfg: &OptConfig) -> Result<SdpSolution> {
    let dim = lm.f.nrows();
    let mut prob = SdpProblem::new(dim, false).with_objective(Objective::Feasibility { target: 1.0 });
    prob.push(ConstraintMatrix::Dense(&lm.c1 - &lm.d1 * C64::from(q)), Sense::Geq, 0.0, q);
    prob.push(ConstraintMatrix::Dense(&lm.c2 - &lm.d2 * C64::from(q)), Sense::Geq, 0.0, q);
    prob.push(ConstraintMatrix::Dense(lm.f.clone()), Sense::Leq, 1.0, 0.0);
    sdp::solve(&prob, &cfg.solver)
}

enum Verdict {
    Feasible(CMat),
    Infeasible,
    Inconclusive,
}

fn classify(sol: Result<SdpSolution>, tol: f64) -> Verdict {
    match sol {
        Ok(s) if s.status == SdpStatus::Optimal && s.t_opt >= 1.0 - tol => Verdict::Feasible(s.x_mat),
        Ok(s) if s.status == SdpStatus::Optimal || s.status == SdpStatus::Infeasible => Verdict::Infeasible,
        Ok(s) if s.primal_residual <= tol && s.t_opt >= 1.0 => Verdict::Feasible(s.x_mat),
        _ => Verdict::Inconclusive,
    }
}

/// Beamformer maximising the smaller SNR for fixed phases, by bisection on
/// the SNR level with an SDP feasibility test, followed by Gaussian
/// randomisation of the last feasible lifted matrix.
pub fn optimize_beamformer_ob<R: Rng + ?Sized>(
    c: &Combined,
    pw: &Power,
    cfg: &OptConfig,
    rng: &mut R,
) -> Result<ObOutcome> {
    let m = c.h1.len();
    let scale = c.h1.norm().max(c.h2.norm());
    if scale == 0.0 {
        return Err(Error::Numerical("both combined channels vanish".into()));
    }
    // Normalise: u_k = h̃_k / s, B = s·A, q = (γ/β) / s², power / P_B.
    let u = Combined { h1: &c.h1 / C64::from(scale), h2: &c.h2 / C64::from(scale) };
    let norm_pw = Power { p_s: pw.p_s / pw.p_b, p_b: 1.0, sigma2: pw.sigma2 / (scale * scale * pw.p_b) };
    let lm = build_lifted(&u.h1, &u.h2, &norm_pw);
    let tol = cfg.solver.tol.max(1e-9);

    let bis = &cfg.bisection;
    let mut q_up = u.h1.norm_squared().min(u.h2.norm_squared()) * (1.0 + bis.upper_margin);
    let width_tol = bis.q_tol * q_up;
    let mut probes = 0;
    let mut inconclusive = 0;
    let mut widened = 0;
    loop {
        probes += 1;
        match classify(ob_probe(&lm, q_up, cfg), tol) {
            Verdict::Feasible(_) => {
                widened += 1;
                if widened > bis.max_widen {
                    return Err(Error::Numerical("SNR upper bound is not infeasible after widening".into()));
                }
                q_up *= 2.0;
            }
            Verdict::Infeasible => break,
            Verdict::Inconclusive => {
                inconclusive += 1;
                break;
            }
        }
    }
    let mut q_low = 0.0;
    let mut best_xi: Option<CMat> = None;
    while q_up - q_low > width_tol {
        let q = 0.5 * (q_low + q_up);
        probes += 1;
        match classify(ob_probe(&lm, q, cfg), tol) {
            Verdict::Feasible(xi) => {
                q_low = q;
                best_xi = Some(xi);
            }
            Verdict::Infeasible => q_up = q,
            Verdict::Inconclusive => {
                inconclusive += 1;
                q_up = q;
            }
        }
    }
    let beta = pw.beta();
    let to_snr = |q: f64| q * scale * scale * beta;
    let mrt = mrr_mrt_beamformer(c, pw)?;
    let Some(xi) = best_xi else {
        return Ok(ObOutcome {
            a: mrt,
            snr_low: 0.0,
            snr_up: to_snr(q_up),
            probes,
            inconclusive,
            fallback: true,
        });
    };
    let reshape = |v: &CVec| unvec(v, m) / C64::from(scale);
    let eval = |v: &CVec| match rescale_to_budget(c, &reshape(v), pw) {
        Some(a) => min_snr(c, &a, pw),
        None => f64::NEG_INFINITY,
    };
    let r = gaussian_randomization(&xi, &cfg.randomization, rng, |v| v.clone(), eval)?;
    let a = rescale_to_budget(c, &reshape(&r.vector), pw)
        .ok_or_else(|| Error::Numerical("randomised beamformer has zero power".into()))?;
    Ok(ObOutcome { a, snr_low: to_snr(q_low), snr_up: to_snr(q_up), probes, inconclusive, fallback: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDesign {
    pub phi: PhaseShifts,
    pub a: CMat,
    /// Smaller of the two user SNRs (linear).
    pub min_snr: f64,
    pub method: Method,
}

impl JointDesign {
    fn new(ch: &ChannelSet, phi: PhaseShifts, a: CMat, pw: &Power, method: Method) -> Self {
        let c = Combined::new(ch, &phi);
        let min_snr = min_snr(&c, &a, pw);
        JointDesign { phi, a, min_snr, method }
    }

    pub fn min_snr_db(&self) -> f64 {
        crate::to_db(self.min_snr)
    }

    pub fn power(&self, ch: &ChannelSet, pw: &Power) -> f64 {
        bs_power(&Combined::new(ch, &self.phi), &self.a, pw)
    }
}

/// Phases maximising `min_k ‖Ḡ_k φ̄‖²`.
pub fn optimize_phase_upperbound<R: Rng + ?Sized>(ch: &ChannelSet, cfg: &OptConfig, rng: &mut R) -> Result<PhaseShifts> {
    Ok(sum_phase(ch, cfg, rng)?.0)
}

fn beamformer_for<R: Rng + ?Sized>(
    ch: &ChannelSet,
    phi: &PhaseShifts,
    pw: &Power,
    optimized: bool,
    cfg: &OptConfig,
    rng: &mut R,
) -> Result<CMat> {
    let c = Combined::new(ch, phi);
    if optimized {
        Ok(optimize_beamformer_ob(&c, pw, cfg, rng)?.a)
    } else {
        mrr_mrt_beamformer(&c, pw)
    }
}

pub fn sum_ob<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<JointDesign> {
    let phi = optimize_phase_upperbound(ch, cfg, rng)?;
    sum_ob_from_phases(ch, phi, pw, cfg, rng)
}

pub fn sum_mrb<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<JointDesign> {
    let phi = optimize_phase_upperbound(ch, cfg, rng)?;
    sum_mrb_from_phases(ch, phi, pw)
}

/// SUM-OB given already optimised upper-bound phases.
pub fn sum_ob_from_phases<R: Rng + ?Sized>(
    ch: &ChannelSet,
    phi: PhaseShifts,
    pw: &Power,
    cfg: &OptConfig,
    rng: &mut R,
) -> Result<JointDesign> {
    let a = beamformer_for(ch, &phi, pw, true, cfg, rng)?;
    Ok(JointDesign::new(ch, phi, a, pw, Method::SumOb))
}

/// SUM-MRB given already optimised upper-bound phases.
pub fn sum_mrb_from_phases(ch: &ChannelSet, phi: PhaseShifts, pw: &Power) -> Result<JointDesign> {
    let a = mrr_mrt_beamformer(&Combined::new(ch, &phi), pw)?;
    Ok(JointDesign::new(ch, phi, a, pw, Method::SumMrb))
}

/// Linearisation of the SNRs around a previous design:
/// `ν_k = h̃_kᵀ A` (returned as column vectors) and `ζ_k = ‖ν_k‖² + 1`.
pub fn gsm_nu_zeta(ch: &ChannelSet, phi_prev: &PhaseShifts, a_prev: &CMat) -> (CVec, CVec, f64, f64) {
    let c = Combined::new(ch, phi_prev);
    let nu1 = a_prev.tr_mul(&c.h1);
    let nu2 = a_prev.tr_mul(&c.h2);
    let z1 = nu1.norm_squared() + 1.0;
    let z2 = nu2.norm_squared() + 1.0;
    (nu1, nu2, z1, z2)
}

pub fn gsm_ob<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<JointDesign> {
    let seed = sum_ob(ch, pw, cfg, rng)?;
    gsm_multi_from_seed(ch, pw, cfg, seed, rng)
}

pub fn gsm_mrb<R: Rng + ?Sized>(ch: &ChannelSet, pw: &Power, cfg: &OptConfig, rng: &mut R) -> Result<JointDesign> {
    let seed = sum_mrb(ch, pw, cfg, rng)?;
    gsm_multi_from_seed(ch, pw, cfg, seed, rng)
}

/// GSM generations from a SUM-OB or SUM-MRB seed; the beamformer update
/// follows the seed's method. Never returns a design worse than the seed.
pub fn gsm_multi_from_seed<R: Rng + ?Sized>(
    ch: &ChannelSet,
    pw: &Power,
    cfg: &OptConfig,
    seed: JointDesign,
    rng: &mut R,
) -> Result<JointDesign> {
    let (optimized, method) = match seed.method {
        Method::SumOb | Method::GsmOb => (true, Method::GsmOb),
        Method::SumMrb | Method::GsmMrb => (false, Method::GsmMrb),
    };
    let mut best = JointDesign { method, ..seed };
    if ch.n() == 0 {
        return Ok(best);
    }
    let mut reference = best.clone();
    for _ in 0..cfg.gsm.generations {
        let (nu1, nu2, z1, z2) = gsm_nu_zeta(ch, &reference.phi, &reference.a);
        // |ν2ᵀ Ḡ1 φ̄|² / ζ2 tracks γ2, |ν1ᵀ Ḡ2 φ̄|² / ζ1 tracks γ1.
        let w1: CVec = ch.g1_bar.tr_mul(&nu2);
        let w2: CVec = ch.g2_bar.tr_mul(&nu1);
        if w1.norm() == 0.0 || w2.norm() == 0.0 {
            break;
        }
        let u1 = CMat::from_column_slice(w1.len(), 1, w1.conjugate().as_slice());
        let u2 = CMat::from_column_slice(w2.len(), 1, w2.conjugate().as_slice());
        let eval = |v: &CVec| (w1.dot(v).norm_sqr() / z2).min(w2.dot(v).norm_sqr() / z1);
        let Ok((phi, _, _)) = weighted_phase_sdp(u1, u2, (z2, z1), cfg, rng, eval) else { continue };
        let Ok(a) = beamformer_for(ch, &phi, pw, optimized, cfg, rng) else { continue };
        let design = JointDesign::new(ch, phi, a, pw, method);
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
