//! Gaussian randomisation: recovering a vector from a relaxed PSD solution.

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::linalg::{eigh_desc, CMat, CVec, C64};
use crate::system::PhaseShifts;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RandomizationConfig {
    /// Number of Gaussian candidates.
    pub draws: usize,
    /// Negative eigenvalues down to `-eps_psd·λ_max` are clipped to zero.
    pub eps_psd: f64,
    /// `λ2 ≤ rank_one_tol·λ1` counts as rank one.
    pub rank_one_tol: f64,
    /// Also evaluate the principal eigenvector when the solution is not rank one.
    pub include_principal: bool,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        RandomizationConfig { draws: 200, eps_psd: 1e-8, rank_one_tol: 1e-6, include_principal: true }
    }
}

#[derive(Debug, Clone)]
pub struct Randomized {
    /// Best candidate after projection.
    pub vector: CVec,
    pub value: f64,
    /// Whether the rank-one shortcut was taken.
    pub rank_one: bool,
}

/// Picks the best of several candidates drawn from `CN(0, Ψ)`.
///
/// Every candidate goes through `project` before `evaluate`; ties keep the
/// earliest candidate. Draws are consumed sequentially from `rng`, so the
/// candidate set for `D` draws is a prefix of the one for `D + 1`.
pub fn gaussian_randomization<R, P, E>(
    psi: &CMat,
    cfg: &RandomizationConfig,
    rng: &mut R,
    mut project: P,
    mut evaluate: E,
) -> Result<Randomized>
where
    R: Rng + ?Sized,
    P: FnMut(&CVec) -> CVec,
    E: FnMut(&CVec) -> f64,
{
    let n = psi.nrows();
    if n == 0 || psi.ncols() != n {
        return Err(Error::Dimension(format!("randomisation needs a square non-empty matrix, got {:?}", psi.shape())));
    }
    let (mut values, vectors) = eigh_desc(psi);
    let top = values[0].max(0.0);
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -cfg.eps_psd * top.max(1e-300) {
                return Err(Error::NotPsd(*v));
            }
            *v = 0.0;
        }
    }
    if top <= 0.0 {
        return Err(Error::Numerical("relaxed solution is zero".into()));
    }
    let principal = vectors.column(0) * C64::from(top.sqrt());
    if n == 1 || values[1] <= cfg.rank_one_tol * top {
        let vector = project(&principal.into_owned());
        let value = evaluate(&vector);
        return Ok(Randomized { vector, value, rank_one: true });
    }

    // Candidates v = U Σ^{1/2} e with e ~ CN(0, I).
    let rank = values.iter().take_while(|&&v| v > 0.0).count();
    let factor = CMat::from_fn(n, rank, |i, k| vectors[(i, k)] * values[k].sqrt());
    let mut best: Option<(CVec, f64)> = None;
    let mut consider = |cand: CVec, best: &mut Option<(CVec, f64)>| {
        let projected = project(&cand);
        let value = evaluate(&projected);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            *best = Some((projected, value));
        }
    };
    if cfg.include_principal {
        consider(principal.into_owned(), &mut best);
    }
    for _ in 0..cfg.draws {
        let e = CVec::from_fn(rank, |_, _| complex_gaussian(rng));
        consider(&factor * e, &mut best);
    }
    let (vector, value) = best.ok_or_else(|| Error::InvalidParameter("no randomisation candidates".into()))?;
    Ok(Randomized { vector, value, rank_one: false })
}

/// Unit-modulus phases from a lifted vector `[φ; φ_{N+1}]`, referenced to
/// the last entry: `φ_n = exp(j(arg φ̄_n − arg φ̄_{N+1}))`.
pub fn extract_phases(phi_bar: &CVec) -> Result<PhaseShifts> {
    let n1 = phi_bar.len();
    if n1 == 0 {
        return Err(Error::Dimension("empty lifted vector".into()));
    }
    let reference = phi_bar[n1 - 1];
    if reference.norm() < 1e-12 {
        return Err(Error::Numerical("reference entry of the lifted vector is zero".into()));
    }
    let rot = reference.conj() / reference.norm();
    Ok(PhaseShifts::from_unit(CVec::from_fn(n1 - 1, |i, _| {
        let z = phi_bar[i] * rot;
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            C64::new(1.0, 0.0)
        }
    })))
}

/// Projection of an arbitrary lifted vector onto `{[φ; 1] : |φ_n| = 1}`.
/// Total: zero entries map to phase zero, a zero reference is treated as 1.
pub fn project_unit_modulus(v: &CVec) -> CVec {
    let n1 = v.len();
    let reference = v[n1 - 1];
    let rot = if reference.norm() > 0.0 { reference.conj() / reference.norm() } else { C64::new(1.0, 0.0) };
    CVec::from_fn(n1, |i, _| {
        if i + 1 == n1 {
            return C64::new(1.0, 0.0);
        }
        let z = v[i] * rot;
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            C64::new(1.0, 0.0)
        }
    })
}
