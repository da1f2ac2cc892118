//! Oracles and checks shared by the integration suites and the acceptance
//! runner. Everything here recomputes quantities from first principles
//! rather than through the library's own evaluators.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ris_twr::channel::{ArrayConfig, ChannelModel, ChannelSet};
use ris_twr::linalg::{eigh_desc, vec_of};
use ris_twr::multi::{build_lifted, mrr_mrt_beamformer, optimize_beamformer_ob};
use ris_twr::sdp::{self, ConstraintMatrix, SdpProblem, SdpStatus, Sense, SolverConfig};
use ris_twr::single::OptConfig;
use ris_twr::system::{optimal_tau, snr_pair, Combined, PhaseShifts, Power};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn cgauss<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cvec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CVec {
    CVec::from_fn(n, |_, _| cgauss(rng) * scale)
}

pub fn cmat<R: Rng>(rng: &mut R, r: usize, c: usize, scale: f64) -> CMat {
    CMat::from_fn(r, c, |_, _| cgauss(rng) * scale)
}

pub fn random_phases<R: Rng>(rng: &mut R, n: usize) -> PhaseShifts {
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    PhaseShifts::from_angles(&a)
}

/// Instance with unit-scale links, where the reflected and direct paths
/// are comparable so the phases matter.
pub fn unit_instance(seed: u64, m: usize, n: usize) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h1 = cvec(&mut rng, m, 0.5);
    let h2 = cvec(&mut rng, m, 0.5);
    let g1 = cvec(&mut rng, n, 1.0);
    let g2 = cvec(&mut rng, n, 1.0);
    let v = cmat(&mut rng, m, n, 1.0);
    ChannelSet::from_parts(h1, h2, g1, g2, v).unwrap()
}

pub fn unit_power() -> Power {
    Power::new(1.0, 10.0, 0.1).unwrap()
}

/// Physical-scale instance from the default propagation model.
pub fn physical_instance(seed: u64, m: usize, n_h: usize, n_v: usize) -> ChannelSet {
    let model = ChannelModel {
        array: ArrayConfig { m, n_h, n_v, ..Default::default() },
        ..Default::default()
    };
    model.sample(seed).unwrap()
}

pub fn physical_power(pb_dbm: f64) -> Power {
    Power::from_dbm(0.0, pb_dbm, 180e3).unwrap()
}

/// `h + V diag(g) φ`, evaluated element by element.
pub fn combined(h: &CVec, v: &CMat, g: &CVec, phi: &[C64]) -> CVec {
    let mut out = h.clone();
    for (j, &p) in phi.iter().enumerate() {
        for i in 0..h.len() {
            out[i] += v[(i, j)] * g[j] * p;
        }
    }
    out
}

/// User SNRs of a relay matrix written out from the signal model:
/// user 1 hears `h̃1ᵀ A h̃2 x2` over noise amplified by `h̃1ᵀ A`.
pub fn snr_direct(h1: &CVec, h2: &CVec, a: &CMat, pw: &Power) -> (f64, f64) {
    let beta = pw.p_s / pw.sigma2;
    let row = |h: &CVec| -> Vec<C64> {
        (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| h[i] * a[(i, j)]).sum()).collect()
    };
    let r1 = row(h1);
    let r2 = row(h2);
    let dot = |r: &[C64], h: &CVec| -> C64 { r.iter().zip(h.iter()).map(|(x, y)| x * y).sum() };
    let n1: f64 = r1.iter().map(|z| z.norm_sqr()).sum();
    let n2: f64 = r2.iter().map(|z| z.norm_sqr()).sum();
    (beta * dot(&r1, h2).norm_sqr() / (n1 + 1.0), beta * dot(&r2, h1).norm_sqr() / (n2 + 1.0))
}

/// Relay transmit power `P_S‖A h̃1‖² + P_S‖A h̃2‖² + σ²‖A‖²_F`.
pub fn power_direct(h1: &CVec, h2: &CVec, a: &CMat, pw: &Power) -> f64 {
    let col = |h: &CVec| -> f64 {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * h[j]).sum::<C64>().norm_sqr()).sum()
    };
    pw.p_s * col(h1) + pw.p_s * col(h2) + pw.sigma2 * a.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Closed-form single-antenna min-SNR at the budget-filling amplifier.
pub fn single_min_snr(ch: &ChannelSet, phi: &[C64], pw: &Power) -> f64 {
    let h1 = combined(&ch.h1, &ch.v, &ch.g1, phi)[0].norm_sqr();
    let h2 = combined(&ch.h2, &ch.v, &ch.g2, phi)[0].norm_sqr();
    let beta = pw.p_s / pw.sigma2;
    let tau = pw.p_b / (pw.p_s * h1 + pw.p_s * h2 + pw.sigma2);
    let g1 = beta * tau * h1 * h2 / (tau * h1 + 1.0);
    let g2 = beta * tau * h1 * h2 / (tau * h2 + 1.0);
    g1.min(g2)
}

/// Best min-SNR over a `steps × steps` grid of the two phases (N = 2, M = 1).
pub fn single_grid_optimum(ch: &ChannelSet, pw: &Power, steps: usize) -> f64 {
    assert_eq!(ch.n(), 2);
    let mut best = 0.0f64;
    for i in 0..steps {
        let p1 = C64::from_polar(1.0, 2.0 * PI * i as f64 / steps as f64);
        for j in 0..steps {
            let p2 = C64::from_polar(1.0, 2.0 * PI * j as f64 / steps as f64);
            best = best.max(single_min_snr(ch, &[p1, p2], pw));
        }
    }
    best
}

fn inner_ob(ch: &ChannelSet, a1: f64, a2: f64, pw: &Power, cfg: &OptConfig, seed: u64) -> f64 {
    let phi = PhaseShifts::from_angles(&[a1, a2]);
    let c = Combined::new(ch, &phi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match optimize_beamformer_ob(&c, pw, cfg, &mut rng) {
        Ok(o) => {
            let (g1, g2) = snr_direct(&c.h1, &c.h2, &o.a, pw);
            g1.min(g2)
        }
        Err(_) => 0.0,
    }
}

/// Joint oracle for N = 2, M ≥ 1: a coarse phase grid with the bisection
/// beamformer solved at every point, then a fine grid around the best
/// `refine` coarse cells.
pub fn joint_grid_optimum(
    ch: &ChannelSet,
    pw: &Power,
    coarse: usize,
    fine: usize,
    refine: usize,
    cfg: &OptConfig,
) -> f64 {
    assert_eq!(ch.n(), 2);
    let step = 2.0 * PI / coarse as f64;
    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(coarse * coarse);
    for i in 0..coarse {
        for j in 0..coarse {
            let (a1, a2) = (i as f64 * step, j as f64 * step);
            cells.push((inner_ob(ch, a1, a2, pw, cfg, (i * coarse + j) as u64), a1, a2));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut best = cells[0].0;
    for &(_, c1, c2) in cells.iter().take(refine) {
        for i in 0..=fine {
            for j in 0..=fine {
                let a1 = c1 - step + 2.0 * step * i as f64 / fine as f64;
                let a2 = c2 - step + 2.0 * step * j as f64 / fine as f64;
                best = best.max(inner_ob(ch, a1, a2, pw, cfg, 7 + (i * (fine + 1) + j) as u64));
            }
        }
    }
    best
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub checked: usize,
    pub violations: usize,
    /// Largest normalised error seen.
    pub worst: f64,
}

impl Tally {
    pub fn record(&mut self, err: f64, tol: f64) {
        self.checked += 1;
        if !(err <= tol) {
            self.violations += 1;
        }
        if err.is_nan() || err > self.worst {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    pub fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Lifting identities, amplifier and MRR-MRT plug-back, and the SNR bounds
/// on `instances` random cases. Returns `(name, tally)` per family.
pub fn identity_suite(instances: usize, seed: u64) -> Vec<(&'static str, Tally)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kron = Tally::default();
    let mut tau_plug = Tally::default();
    let mut alpha_plug = Tally::default();
    let mut bound = Tally::default();
    let mut mrt_bound = Tally::default();
    for k in 0..instances {
        let m = [1usize, 2, 3, 4][k % 4];
        let ch = physical_instance(seed ^ (k as u64 * 7919), m, 3, 2);
        let phi = random_phases(&mut rng, ch.n());
        let pb_dbm = rng.random_range(-5.0..30.0);
        let pw = physical_power(pb_dbm);
        let phi_v: Vec<C64> = phi.phi().iter().copied().collect();
        let h1 = combined(&ch.h1, &ch.v, &ch.g1, &phi_v);
        let h2 = combined(&ch.h2, &ch.v, &ch.g2, &phi_v);
        let c = Combined::new(&ch, &phi);

        // Quadratic forms through the lifted matrices.
        let a = cmat(&mut rng, m, m, 1.0);
        let av = vec_of(&a);
        let lifted = build_lifted(&c.h1, &c.h2, &pw);
        let q = |mat: &CMat| (av.adjoint() * mat * &av)[(0, 0)].re;
        let r1: Vec<C64> = (0..m).map(|j| (0..m).map(|i| h1[i] * a[(i, j)]).sum()).collect();
        let r2: Vec<C64> = (0..m).map(|j| (0..m).map(|i| h2[i] * a[(i, j)]).sum()).collect();
        let c1_direct = r1.iter().zip(h2.iter()).map(|(x, y)| x * y).sum::<C64>().norm_sqr();
        let c2_direct = r2.iter().zip(h1.iter()).map(|(x, y)| x * y).sum::<C64>().norm_sqr();
        let d1_direct: f64 = r1.iter().map(|z| z.norm_sqr()).sum();
        let d2_direct: f64 = r2.iter().map(|z| z.norm_sqr()).sum();
        let f_direct = power_direct(&h1, &h2, &a, &pw);
        let e = [
            rel(q(&lifted.c1), c1_direct),
            rel(q(&lifted.c2), c2_direct),
            rel(q(&lifted.d1), d1_direct),
            rel(q(&lifted.d2), d2_direct),
            rel(q(&lifted.f), f_direct),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        kron.record(e, 1e-10);

        // Amplifier fills the budget exactly.
        if m == 1 {
            let tau = optimal_tau(&c, &pw).unwrap();
            let a_tau = CMat::from_element(1, 1, C64::from(tau.sqrt()));
            tau_plug.record(rel(power_direct(&h1, &h2, &a_tau, &pw), pw.p_b), 1e-9);
        }

        // MRR-MRT: budget with equality, and the lower bound on ‖h̃1ᵀA‖².
        let a_mrt = mrr_mrt_beamformer(&c, &pw).unwrap();
        alpha_plug.record(rel(power_direct(&h1, &h2, &a_mrt, &pw), pw.p_b), 1e-9);
        let a1 = CMat::from_fn(m, m, |i, j| (h2[i] * h1[j] + h1[i] * h2[j]).conj());
        let alpha = a_mrt.norm() / a1.norm();
        let h1h1: C64 = h1.iter().map(|z| z * z.conj()).sum();
        let lhs: f64 = (0..m).map(|j| (0..m).map(|i| h1[i] * a_mrt[(i, j)]).sum::<C64>().norm_sqr()).sum();
        let rhs = alpha * alpha * h1h1.norm_sqr() * h2.norm_squared();
        mrt_bound.record(((rhs - lhs) / rhs).max(0.0), 1e-12);

        // Any budget-feasible relay stays below β‖h̃‖².
        let a_rand = cmat(&mut rng, m, m, 1.0);
        let scale = (pw.p_b / power_direct(&h1, &h2, &a_rand, &pw)).sqrt() * rng.random_range(0.0..=1.0f64).sqrt();
        let a_feas = a_rand * C64::from(scale);
        let (g1, g2) = snr_direct(&h1, &h2, &a_feas, &pw);
        let beta = pw.p_s / pw.sigma2;
        let over = ((g1 / (beta * h2.norm_squared())) - 1.0).max((g2 / (beta * h1.norm_squared())) - 1.0);
        bound.record(over.max(0.0), 1e-12);
        // The library evaluator agrees with the direct signal model.
        let (l1, l2) = snr_pair(&c, &a_feas, &pw);
        kron.record(rel(l1, g1).max(rel(l2, g2)), 1e-10);
    }
    vec![
        ("lifting identities", kron),
        ("amplifier plug-back", tau_plug),
        ("MRR-MRT plug-back", alpha_plug),
        ("SNR upper bounds", bound),
        ("MRR-MRT lower bound", mrt_bound),
    ]
}

/// Outcome of certifying one phase-step SDP.
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    pub optimal: bool,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub complementarity: f64,
    pub psd: f64,
    /// Samples whose objective exceeded `t_opt`.
    pub dominance_violations: usize,
}

impl Certificate {
    pub fn worst_kkt(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap).max(self.complementarity).max(self.psd)
    }
}

/// Builds `max t s.t. diag(X) = 1, tr(Ḡ_k^H Ḡ_k X) ≥ t`, solves it and
/// checks the KKT conditions from the returned primal and dual values.
/// `samples` random unit-modulus vectors are tested against `t_opt`.
pub fn certify_phase_sdp(ch: &ChannelSet, dense: bool, samples: usize, seed: u64) -> Certificate {
    let n = ch.n() + 1;
    let mats: Vec<CMat> = [&ch.g1_bar, &ch.g2_bar].iter().map(|g| g.adjoint() * *g).collect();
    let mut p = SdpProblem::new(n, true);
    for (g, mat) in [&ch.g1_bar, &ch.g2_bar].iter().zip(&mats) {
        let cm = if dense { ConstraintMatrix::Dense(mat.clone()) } else { ConstraintMatrix::LowRank(g.adjoint()) };
        p.push(cm, Sense::Geq, 0.0, 1.0);
    }
    let sol = sdp::solve(&p, &SolverConfig::default()).unwrap();
    let t = sol.t_opt;
    let x = &sol.x_mat;
    let xnorm = x.norm();

    // Primal: unit diagonal, trace rows, PSD.
    let mut primal = 0.0f64;
    for j in 0..n {
        primal = primal.max((x[(j, j)].re - 1.0).abs()).max(x[(j, j)].im.abs());
    }
    let traces: Vec<f64> = mats.iter().map(|mt| (mt * x).trace().re).collect();
    for (mt, tr) in mats.iter().zip(&traces) {
        primal = primal.max((t - tr).max(0.0) / (mt.norm() * xnorm));
    }
    let herm = (x - x.adjoint()).norm() / xnorm;
    let (ev, _) = eigh_desc(&((x + x.adjoint()) * C64::from(0.5)));
    let psd = herm.max((-ev[ev.len() - 1] / ev[0]).max(0.0));

    // Dual: y = (diag multipliers, trace multipliers), slack Z = -Σ y_k A_k.
    let y = &sol.duals;
    let (yd, yt) = y.split_at(n);
    let mut z = CMat::zeros(n, n);
    for j in 0..n {
        z[(j, j)] -= C64::from(yd[j]);
    }
    for (mt, &yk) in mats.iter().zip(yt) {
        z -= mt * C64::from(yk);
    }
    let zscale = yd.iter().map(|v| v.abs()).fold(0.0, f64::max)
        + mats.iter().zip(yt).map(|(mt, yk)| yk.abs() * mt.norm()).sum::<f64>();
    let (zev, _) = eigh_desc(&((&z + z.adjoint()) * C64::from(0.5)));
    let mut dual = (-zev[zev.len() - 1] / zscale).max(0.0);
    dual = dual.max((1.0 - yt.iter().sum::<f64>()).abs());
    for &yk in yt {
        dual = dual.max((-yk).max(0.0));
    }
    let dobj = -yd.iter().sum::<f64>();
    let gap = (t - dobj).abs() / t.abs().max(dobj.abs());
    let complementarity = (&z * x).trace().re.abs() / (zscale * xnorm);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dominance_violations = 0;
    for _ in 0..samples {
        let phi = random_phases(&mut rng, ch.n());
        let fb = phi.phi_bar();
        let val = (&ch.g1_bar * &fb).norm_squared().min((&ch.g2_bar * &fb).norm_squared());
        if val > t * (1.0 + 1e-9) {
            dominance_violations += 1;
        }
    }
    Certificate {
        optimal: sol.status == SdpStatus::Optimal,
        primal,
        dual,
        gap,
        complementarity,
        psd,
        dominance_violations,
    }
}

/// Certifies `count` phase-step SDPs of mixed shapes.
pub fn certification_suite(count: usize, seed: u64) -> (usize, usize, f64, usize) {
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut dominance = 0;
    for k in 0..count {
        let m = [1usize, 1, 2, 4][k % 4];
        let (n_h, n_v) = [(2, 2), (4, 2), (4, 4), (6, 4), (5, 5)][k % 5];
        let ch = physical_instance(seed + k as u64, m, n_h, n_v);
        let cert = certify_phase_sdp(&ch, k % 2 == 1, 1000, seed ^ k as u64);
        worst = worst.max(cert.worst_kkt());
        dominance += cert.dominance_violations;
        if !cert.optimal || cert.worst_kkt() > 1e-6 || cert.dominance_violations > 0 {
            failures += 1;
        }
    }
    (count, failures, worst, dominance)
}

/// Largest and smallest eigenvalue of a Hermitian matrix.
pub fn eig_range(m: &CMat) -> (f64, f64) {
    let (ev, _) = eigh_desc(m);
    (ev[0], ev[ev.len() - 1])
}
