//! Primal–dual path-following interior-point method (HKM direction,
//! Mehrotra predictor–corrector) working directly on the Hermitian cone.
//!
//! Standard form after scaling:
//!
//! ```text
//! min cᵀx   s.t.  A(X) + a·x = b,  X ⪰ 0,  x ≥ 0
//! max bᵀy   s.t.  Z = −A*(y) ⪰ 0,  z = c − aᵀy ≥ 0
//! ```
//!
//! where `x = (t, slack_1, …, slack_K)`. Rows are either unit-diagonal
//! selectors or trace constraints; low-rank constraint matrices keep the
//! Schur-complement assembly at O(n²r).

use nalgebra::{DMatrix, DVector};

use super::{ConstraintMatrix, Objective, SdpProblem, SdpSolution, SdpStatus, Sense, SolverConfig};
use crate::linalg::{
    cholesky_with_inverse, hermitian_part, lanczos_min_eig, lower_matvec, matvec, min_eigenvalue, mul, mul_acc, trace_of_product_re, CMat, C64,
};
use crate::{Error, Result};

type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

// Lanczos steps for the step-length estimate; the predictor step only
// feeds the centring heuristic and can afford a rougher value.
const LANCZOS_STEPS: usize = 12;
const LANCZOS_STEPS_PREDICTOR: usize = 8;
const DIVERGENCE: f64 = 1e12;

enum RowKind {
    Diag(usize),
    LowRank(CMat),
    Dense(CMat),
}

struct Scaled {
    n: usize,
    rows: Vec<RowKind>,
    /// LP coefficients, one row per constraint row, one column per LP variable.
    a: RMat,
    b: RVec,
    c: RVec,
    /// Row normalisation factors (1 for diagonal rows).
    row_scale: Vec<f64>,
    /// `t' = t_scale · t`.
    t_scale: f64,
}

impl Scaled {
    fn build(p: &SdpProblem) -> Scaled {
        let n = p.dim;
        let n_diag = if p.unit_diag { n } else { 0 };
        let k = p.constraints.len();
        let m = n_diag + k;
        let mut rows = Vec::with_capacity(m);
        let mut b = RVec::zeros(m);
        let mut row_scale = vec![1.0; m];
        for j in 0..n_diag {
            rows.push(RowKind::Diag(j));
            b[j] = 1.0;
        }
        let mut r1s = Vec::with_capacity(k);
        for (i, con) in p.constraints.iter().enumerate() {
            let norm = con.matrix.frobenius_norm();
            let scale = if norm > 0.0 { norm } else { con.rhs_const.abs().max(con.rhs_t.abs()).max(1.0) };
            let mat = con.matrix.scaled(1.0 / scale);
            rows.push(match mat {
                ConstraintMatrix::LowRank(u) => RowKind::LowRank(u),
                ConstraintMatrix::Dense(d) => RowKind::Dense(d),
            });
            row_scale[n_diag + i] = scale;
            b[n_diag + i] = con.rhs_const / scale;
            r1s.push(con.rhs_t / scale);
        }
        let t_scale = r1s.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        let t_scale = if t_scale > 0.0 { t_scale } else { 1.0 };
        let mut a = RMat::zeros(m, 1 + k);
        for (i, con) in p.constraints.iter().enumerate() {
            a[(n_diag + i, 0)] = -r1s[i] / t_scale;
            a[(n_diag + i, 1 + i)] = match con.sense {
                Sense::Geq => -1.0,
                Sense::Leq => 1.0,
            };
        }
        let mut c = RVec::zeros(1 + k);
        c[0] = -1.0;
        Scaled { n, rows, a, b, c, row_scale, t_scale }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A(Y)_k = Re tr(A_k Y)`.
    fn apply(&self, y: &CMat) -> RVec {
        RVec::from_iterator(
            self.m(),
            self.rows.iter().map(|row| match row {
                RowKind::Diag(j) => y[(*j, *j)].re,
                RowKind::LowRank(u) => {
                    let yu = mul(y, u);
                    u.iter().zip(yu.iter()).map(|(a, b)| (a.conj() * b).re).sum()
                }
                RowKind::Dense(d) => trace_of_product_re(d, y),
            }),
        )
    }

    /// `A*(y) = Σ y_k A_k`.
    fn adjoint(&self, y: &RVec) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n, n);
        for (row, &yk) in self.rows.iter().zip(y.iter()) {
            match row {
                RowKind::Diag(j) => out[(*j, *j)] += C64::from(yk),
                RowKind::LowRank(u) => {
                    mul_acc(C64::from(yk), u, &u.adjoint(), &mut out);
                }
                RowKind::Dense(d) => out += d * C64::from(yk),
            }
        }
        out
    }

    /// HKM Schur complement `M_kl = Re tr(A_k X A_l Z⁻¹)`.
    fn schur(&self, x: &CMat, zinv: &CMat) -> RMat {
        let m = self.m();
        let n = self.n;
        let mut s = RMat::zeros(m, m);
        enum Pre {
            None,
            LowRank { u: CMat, xu: CMat, zu: CMat },
            Dense { d: CMat, w: CMat },
        }
        let pre: Vec<Pre> = self
            .rows
            .iter()
            .map(|row| match row {
                RowKind::Diag(_) => Pre::None,
                RowKind::LowRank(u) => Pre::LowRank { u: u.clone(), xu: mul(x, u), zu: mul(zinv, u) },
                RowKind::Dense(d) => Pre::Dense { d: d.clone(), w: mul(&mul(x, d), zinv) },
            })
            .collect();
        let diag_rows: Vec<(usize, usize)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(k, r)| if let RowKind::Diag(j) = r { Some((k, *j)) } else { None })
            .collect();
        for &(ki, i) in &diag_rows {
            for &(kj, j) in &diag_rows {
                s[(ki, kj)] = (x[(i, j)] * zinv[(j, i)]).re;
            }
        }
        for l in 0..m {
            match &pre[l] {
                Pre::None => {}
                Pre::LowRank { xu, zu, .. } => {
                    for &(ki, i) in &diag_rows {
                        let mut acc = 0.0;
                        for r in 0..xu.ncols() {
                            acc += (xu[(i, r)] * zu[(i, r)].conj()).re;
                        }
                        s[(ki, l)] = acc;
                        s[(l, ki)] = acc;
                    }
                }
                Pre::Dense { w, .. } => {
                    for &(ki, i) in &diag_rows {
                        s[(ki, l)] = w[(i, i)].re;
                        s[(l, ki)] = w[(i, i)].re;
                    }
                }
            }
        }
        for k in 0..m {
            for l in 0..m {
                let v = match (&pre[k], &pre[l]) {
                    (Pre::None, _) | (_, Pre::None) => continue,
                    (Pre::LowRank { u: uk, .. }, Pre::LowRank { xu, zu, .. }) => {
                        let uh = uk.adjoint();
                        let b1 = mul(&uh, zu);
                        let b2 = mul(&uh, xu);
                        b1.iter().zip(b2.iter()).map(|(p, q)| (p.conj() * q).re).sum()
                    }
                    (Pre::Dense { d, .. }, Pre::LowRank { xu, zu, .. }) => {
                        let axu = mul(d, xu);
                        zu.iter().zip(axu.iter()).map(|(p, q)| (p.conj() * q).re).sum()
                    }
                    (Pre::LowRank { u, .. }, Pre::Dense { w, .. }) => {
                        let wu = mul(w, u);
                        u.iter().zip(wu.iter()).map(|(p, q)| (p.conj() * q).re).sum()
                    }
                    (Pre::Dense { d, .. }, Pre::Dense { w, .. }) => trace_of_product_re(d, w),
                };
                s[(k, l)] = v;
            }
        }
        let _ = n;
        (&s + s.transpose()) * 0.5
    }
}

/// Largest step in `[0, ∞)` keeping `L(I + α L⁻¹ΔL⁻ᴴ)Lᴴ ⪰ 0`.
fn sdp_max_step(linv: &CMat, delta: &CMat, steps: usize) -> f64 {
    let n = delta.nrows();
    let lam = lanczos_min_eig(n, steps, |v| lower_matvec(linv, &matvec(delta, &lower_matvec(linv, v, true)), false));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

fn lp_max_step(x: &RVec, dx: &RVec) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&xi, &d)| -xi / d)
        .fold(f64::INFINITY, f64::min)
}

/// Solves the real symmetric positive definite system, falling back to LU
/// when the Schur matrix has lost definiteness numerically.
fn solve_spd(m: &RMat, rhs: &RVec) -> Option<RVec> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut reg = m.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-13 * scale;
    }
    if let Some(ch) = reg.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    m.clone().lu().solve(rhs)
}

struct Iterate {
    x: CMat,
    xl: RVec,
    y: RVec,
    z: CMat,
    zl: RVec,
}

struct Direction {
    dx: CMat,
    dxl: RVec,
    dy: RVec,
    dz: CMat,
    dzl: RVec,
}

struct System<'a> {
    sc: &'a Scaled,
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    schur_fallback: Option<RMat>,
}

impl System<'_> {
    fn solve(&self, rhs: &RVec) -> Option<RVec> {
        match &self.schur_fallback {
            None => Some(self.schur.solve(rhs)),
            Some(m) => solve_spd(m, rhs),
        }
    }
}

/// Newton direction for complementarity targets `X Z = T·Z` (matrix) and
/// `x∘z = t_lp` (LP), given the current dual residuals.
#[allow(clippy::too_many_arguments)]
fn direction(
    sys: &System,
    it: &Iterate,
    zinv: &CMat,
    target: &CMat,
    t_lp: &RVec,
    rd: &CMat,
    rd_lp: &RVec,
    a_g: &RVec,
) -> Option<Direction> {
    let sc = sys.sc;
    // rhs = b − A(T − X R_d Z⁻¹) − a[(t_lp − x∘r_d)/z]
    let mut rhs = &sc.b - sc.apply(target) + a_g;
    let lp_term = RVec::from_iterator(
        t_lp.len(),
        (0..t_lp.len()).map(|i| (t_lp[i] - it.xl[i] * rd_lp[i]) / it.zl[i]),
    );
    rhs -= &sc.a * lp_term;
    let dy = sys.solve(&rhs)?;
    let dz = rd - sc.adjoint(&dy);
    let dzl = rd_lp - sc.a.tr_mul(&dy);
    let xdz = mul(&mul(&it.x, &dz), zinv);
    let dx = hermitian_part(&(target - &it.x - xdz));
    let dxl = RVec::from_iterator(
        t_lp.len(),
        (0..t_lp.len()).map(|i| (t_lp[i] - it.xl[i] * it.zl[i] - it.xl[i] * dzl[i]) / it.zl[i]),
    );
    if dy.iter().any(|v| !v.is_finite()) || dx.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    Some(Direction { dx, dxl, dy, dz, dzl })
}

struct Residuals {
    rd: CMat,
    rd_lp: RVec,
    pinf: f64,
    dinf: f64,
    gap: f64,
    dobj: f64,
    mu: f64,
}

fn residuals(sc: &Scaled, it: &Iterate) -> Residuals {
    let rp = &sc.b - sc.apply(&it.x) - &sc.a * &it.xl;
    let rd = -sc.adjoint(&it.y) - &it.z;
    let rd_lp = &sc.c - sc.a.tr_mul(&it.y) - &it.zl;
    let pinf = rp.norm() / (1.0 + sc.b.norm());
    let dinf = (rd.norm_squared() + rd_lp.norm_squared()).sqrt() / (1.0 + sc.c.norm());
    let pobj = sc.c.dot(&it.xl);
    let dobj = sc.b.dot(&it.y);
    let gap = (pobj - dobj).abs() / pobj.abs().max(dobj.abs()).max(1e-6);
    let comp = crate::linalg::trace_product_re(&it.x, &it.z) + it.xl.dot(&it.zl);
    let mu = comp / (sc.n + it.xl.len()) as f64;
    Residuals { rd, rd_lp, pinf, dinf, gap, dobj, mu }
}

/// Tries the step, shrinking it until both cones admit a Cholesky factor.
/// Returns the new iterate together with the factors of X and Z.
fn take_step(
    it: &Iterate,
    d: &Direction,
    mut ap: f64,
    mut ad: f64,
) -> Option<(Iterate, (CMat, CMat), (CMat, CMat), f64, f64)> {
    for _ in 0..60 {
        let x = &it.x + &d.dx * C64::from(ap);
        let z = &it.z + &d.dz * C64::from(ad);
        let fx = cholesky_with_inverse(&x);
        let fz = cholesky_with_inverse(&z);
        match (fx, fz) {
            (Some(fx), Some(fz)) => {
                let next = Iterate {
                    x,
                    xl: &it.xl + &d.dxl * ap,
                    y: &it.y + &d.dy * ad,
                    z,
                    zl: &it.zl + &d.dzl * ad,
                };
                return Some((next, fx, fz, ap, ad));
            }
            (fx, fz) => {
                if fx.is_none() {
                    ap *= 0.8;
                }
                if fz.is_none() {
                    ad *= 0.8;
                }
            }
        }
    }
    None
}

pub fn solve(problem: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    problem.validate()?;
    let sc = Scaled::build(problem);
    let n = sc.n;
    let m = sc.m();
    let p = sc.c.len();

    let max_row = sc
        .rows
        .iter()
        .zip(sc.b.iter())
        .map(|(_, bk)| 1.0 + bk.abs())
        .fold(0.0f64, f64::max);
    let xi = 10f64.max((n as f64).sqrt()).max(n as f64 * max_row / 2.0);
    let zeta = 10f64.max((n as f64).sqrt());
    let mut it = Iterate {
        x: CMat::identity(n, n) * C64::from(xi),
        xl: RVec::from_element(p, xi),
        y: RVec::zeros(m),
        z: CMat::identity(n, n) * C64::from(zeta),
        zl: RVec::from_element(p, zeta),
    };
    let mut fx = cholesky_with_inverse(&it.x).ok_or_else(|| Error::Numerical("initial X".into()))?;
    let mut fz = cholesky_with_inverse(&it.z).ok_or_else(|| Error::Numerical("initial Z".into()))?;

    let target_scaled = match problem.objective {
        Objective::Feasibility { target } => Some(target),
        Objective::MaximizeT => None,
    };

    let mut status = SdpStatus::MaxIters;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;
    let mut stall = 0;
    let mut res = residuals(&sc, &it);
    let init_scale = 1.0 + it.x.norm() + it.xl.norm();

    for iter in 0..cfg.max_iters {
        iterations = iter;
        let t_primal = it.xl[0] / sc.t_scale;
        let dual_bound = -res.dobj / sc.t_scale;
        if res.pinf <= cfg.tol && res.dinf <= cfg.tol && res.gap <= cfg.tol {
            status = SdpStatus::Optimal;
            message = "converged".into();
            break;
        }
        if let Some(target) = target_scaled {
            if res.pinf <= cfg.tol && t_primal >= target {
                status = SdpStatus::Optimal;
                message = "target level reached by a primal point".into();
                break;
            }
            if res.dinf <= cfg.tol && dual_bound < target - cfg.tol * (1.0 + target.abs()) {
                status = SdpStatus::Infeasible;
                message = format!("dual bound {dual_bound:.6e} is below the target {target:.6e}");
                break;
            }
        }
        if it.x.norm() + it.xl.norm() > DIVERGENCE * init_scale {
            status = SdpStatus::Infeasible;
            message = "primal iterates diverge: the objective is unbounded (dual infeasible)".into();
            break;
        }
        if it.y.norm() > DIVERGENCE * (1.0 + sc.b.norm()) && res.pinf > cfg.tol {
            status = SdpStatus::Infeasible;
            message = "dual iterates diverge: no point satisfies the constraints (primal infeasible)".into();
            break;
        }

        let zinv = hermitian_part(&mul(&fz.1.adjoint(), &fz.1));
        let mut schur = sc.schur(&it.x, &zinv);
        let dvec = it.xl.component_div(&it.zl);
        schur += &sc.a * RMat::from_diagonal(&dvec) * sc.a.transpose();
        let sys = match schur.clone().cholesky() {
            Some(ch) => System { sc: &sc, schur: ch, schur_fallback: None },
            None => System {
                sc: &sc,
                schur: RMat::identity(m, m).cholesky().expect("identity is SPD"),
                schur_fallback: Some(schur),
            },
        };

        let rd_norm = res.rd.norm();
        let a_g = if rd_norm > 1e-15 * (1.0 + it.z.norm()) {
            let g = mul(&mul(&it.x, &res.rd), &zinv);
            sc.apply(&g)
        } else {
            RVec::zeros(m)
        };

        // Predictor.
        let zero_t = CMat::zeros(n, n);
        let zero_lp = RVec::zeros(p);
        let Some(pred) = direction(&sys, &it, &zinv, &zero_t, &zero_lp, &res.rd, &res.rd_lp, &a_g) else {
            message = "Schur complement solve failed".into();
            break;
        };
        let ap_a = sdp_max_step(&fx.1, &pred.dx, LANCZOS_STEPS_PREDICTOR)
            .min(lp_max_step(&it.xl, &pred.dxl))
            .min(1.0);
        let ad_a = sdp_max_step(&fz.1, &pred.dz, LANCZOS_STEPS_PREDICTOR)
            .min(lp_max_step(&it.zl, &pred.dzl))
            .min(1.0);
        let x_a = &it.x + &pred.dx * C64::from(ap_a);
        let z_a = &it.z + &pred.dz * C64::from(ad_a);
        let xl_a = &it.xl + &pred.dxl * ap_a;
        let zl_a = &it.zl + &pred.dzl * ad_a;
        let mu_aff = (crate::linalg::trace_product_re(&x_a, &z_a) + xl_a.dot(&zl_a)) / (n + p) as f64;
        let sigma = (mu_aff / res.mu).max(0.0).powi(3).min(1.0);

        // Corrector.
        let corr = mul(&mul(&pred.dx, &pred.dz), &zinv);
        let target = &zinv * C64::from(sigma * res.mu) - corr;
        let t_lp = RVec::from_iterator(p, (0..p).map(|i| sigma * res.mu - pred.dxl[i] * pred.dzl[i]));
        let Some(dir) = direction(&sys, &it, &zinv, &target, &t_lp, &res.rd, &res.rd_lp, &a_g) else {
            message = "Schur complement solve failed".into();
            break;
        };
        let ap = sdp_max_step(&fx.1, &dir.dx, LANCZOS_STEPS).min(lp_max_step(&it.xl, &dir.dxl));
        let ad = sdp_max_step(&fz.1, &dir.dz, LANCZOS_STEPS).min(lp_max_step(&it.zl, &dir.dzl));
        let gamma = 0.9 + 0.09 * ap_a.min(ad_a);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        let Some((next, nfx, nfz, ap, ad)) = take_step(&it, &dir, ap, ad) else {
            message = "no step keeps the iterate interior".into();
            break;
        };
        if ap.max(ad) < 1e-10 {
            stall += 1;
            if stall > 5 {
                message = "progress stalled".into();
                break;
            }
        } else {
            stall = 0;
        }
        it = next;
        fx = nfx;
        fz = nfz;
        res = residuals(&sc, &it);
        iterations = iter + 1;
    }

    let t_opt = it.xl[0] / sc.t_scale;
    let duals = it
        .y
        .iter()
        .zip(&sc.row_scale)
        .map(|(y, s)| y / (sc.t_scale * s))
        .collect();
    let x_mat = hermitian_part(&it.x);
    Ok(SdpSolution {
        min_eigenvalue: min_eigenvalue(&x_mat),
        x_mat,
        t_opt,
        status,
        primal_residual: res.pinf,
        dual_residual: res.dinf,
        gap: res.gap,
        dual_bound: -res.dobj / sc.t_scale,
        duals,
        iterations,
        message: if status == SdpStatus::MaxIters && message == "iteration limit reached" {
            format!("iteration limit {} reached (pinf {:.2e}, dinf {:.2e}, gap {:.2e})", cfg.max_iters, res.pinf, res.dinf, res.gap)
        } else {
            message
        },
    })
}
