//! Dense complex linear-algebra kernels shared by the channel model, the
//! SDP engine and the beamforming routines.
//!
//! nalgebra supplies the storage and the small decompositions; the hot
//! paths (products, Cholesky, triangular inverse) go through
//! `matrixmultiply`'s complex GEMM, which is several times faster than
//! the generic complex product for the sizes met here (n ≈ 100–200).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

const BLOCK: usize = 32;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{jθ}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// C ← α·A·B + β·C on column-major nalgebra storage.
fn gemm_into(alpha: C64, a: &CMat, b: &CMat, beta: C64, out: &mut CMat) {
    let (m, k) = a.shape();
    let (kb, n) = b.shape();
    assert_eq!(k, kb, "inner dimensions disagree");
    assert_eq!(out.shape(), (m, n), "output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *out *= beta;
        return;
    }
    // SAFETY: Complex64 is repr(C) {re, im}, identical in layout to [f64; 2];
    // strides describe nalgebra's contiguous column-major buffers.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [beta.re, beta.im],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// A·B.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows(), b.ncols());
    gemm_into(C64::new(1.0, 0.0), a, b, C64::new(0.0, 0.0), &mut out);
    out
}

/// C += α·A·B.
pub fn mul_acc(alpha: C64, a: &CMat, b: &CMat, out: &mut CMat) {
    gemm_into(alpha, a, b, C64::new(1.0, 0.0), out);
}

/// A·v for a column vector.
pub fn matvec(a: &CMat, v: &CVec) -> CVec {
    let (m, n) = a.shape();
    assert_eq!(n, v.len(), "dimension mismatch");
    let mut out = vec![C64::new(0.0, 0.0); m];
    let data = a.as_slice();
    for (j, &vj) in v.iter().enumerate() {
        let col = &data[j * m..(j + 1) * m];
        for (o, &aij) in out.iter_mut().zip(col) {
            *o += aij * vj;
        }
    }
    CVec::from_vec(out)
}

/// L·v and L^H·v for lower-triangular `L`, touching only its nonzeros.
pub fn lower_matvec(l: &CMat, v: &CVec, adjoint: bool) -> CVec {
    let n = l.nrows();
    assert_eq!(n, v.len(), "dimension mismatch");
    let data = l.as_slice();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let col = &data[j * n + j..(j + 1) * n];
        if adjoint {
            out[j] = col.iter().zip(&v.as_slice()[j..]).fold(C64::new(0.0, 0.0), |acc, (&a, &x)| acc + a.conj() * x);
        } else {
            let vj = v[j];
            for (o, &a) in out[j..].iter_mut().zip(col) {
                *o += a * vj;
            }
        }
    }
    CVec::from_vec(out)
}

/// A·B^H.
pub fn mul_adj(a: &CMat, b: &CMat) -> CMat {
    mul(a, &b.adjoint())
}

/// (M + M^H)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Largest deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Re tr(A·B) for Hermitian A, B, in O(n²).
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) when B is Hermitian.
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Re tr(P·R) for arbitrary square P, R: Σ_ab P_ab R_ba.
pub fn trace_of_product_re(p: &CMat, r: &CMat) -> f64 {
    let n = p.nrows();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            let x = p[(a, b)];
            let y = r[(b, a)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Kronecker product of two matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major vectorisation.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_iterator(a.len(), a.iter().copied())
}

/// Inverse of [`vec_of`] for a square `m × m` matrix.
pub fn unvec(v: &CVec, m: usize) -> CMat {
    assert_eq!(v.len(), m * m);
    CMat::from_iterator(m, m, v.iter().copied())
}

/// Outer product u·v^H.
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

/// Unblocked Cholesky of a small Hermitian matrix together with the inverse
/// of its factor. Returns `None` when a pivot is not strictly positive.
fn chol_inv_small(a: &CMat) -> Option<(CMat, CMat)> {
    let n = a.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut li = CMat::zeros(n, n);
    for j in 0..n {
        li[(j, j)] = C64::new(1.0 / l[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let mut s = C64::new(0.0, 0.0);
            for k in j..i {
                s += l[(i, k)] * li[(k, j)];
            }
            li[(i, j)] = -s / l[(i, i)].re;
        }
    }
    Some((l, li))
}

/// Cholesky factor `L` (lower, `A = L L^H`) and its inverse, computed by a
/// recursive blocked scheme so the bulk of the work is GEMM.
pub fn cholesky_with_inverse(a: &CMat) -> Option<(CMat, CMat)> {
    let n = a.nrows();
    if n <= BLOCK {
        return chol_inv_small(a);
    }
    let n1 = n / 2;
    let n2 = n - n1;
    let a11 = a.view((0, 0), (n1, n1)).into_owned();
    let a21 = a.view((n1, 0), (n2, n1)).into_owned();
    let a22 = a.view((n1, n1), (n2, n2)).into_owned();
    let (l11, l11i) = cholesky_with_inverse(&a11)?;
    let l21 = mul_adj(&a21, &l11i);
    let mut s = a22;
    let l21h = l21.adjoint();
    gemm_into(C64::new(-1.0, 0.0), &l21, &l21h, C64::new(1.0, 0.0), &mut s);
    let (l22, l22i) = cholesky_with_inverse(&s)?;
    let linv21 = -mul(&mul(&l22i, &l21), &l11i);
    let mut l = CMat::zeros(n, n);
    let mut li = CMat::zeros(n, n);
    l.view_mut((0, 0), (n1, n1)).copy_from(&l11);
    l.view_mut((n1, 0), (n2, n1)).copy_from(&l21);
    l.view_mut((n1, n1), (n2, n2)).copy_from(&l22);
    li.view_mut((0, 0), (n1, n1)).copy_from(&l11i);
    li.view_mut((n1, 0), (n2, n1)).copy_from(&linv21);
    li.view_mut((n1, n1), (n2, n2)).copy_from(&l22i);
    Some((l, li))
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn eigh_desc(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Estimate of the smallest eigenvalue of the Hermitian operator `apply`
/// by Lanczos with full reorthogonalisation. For `steps >= n` the result
/// is exact up to rounding; otherwise it is the smallest Ritz value, which
/// lies at or above the true minimum.
pub fn lanczos_min_eig<F>(n: usize, steps: usize, mut apply: F) -> f64
where
    F: FnMut(&CVec) -> CVec,
{
    if n == 0 {
        return 0.0;
    }
    let k_max = steps.min(n).max(1);
    let mut basis: Vec<CVec> = Vec::with_capacity(k_max);
    let mut alpha = Vec::with_capacity(k_max);
    let mut beta: Vec<f64> = Vec::with_capacity(k_max);
    // Deterministic, non-degenerate start vector.
    let mut q = CVec::from_fn(n, |i, _| C64::new(1.0 + 0.37 * ((i * 7919) % 13) as f64, 0.11 * (i % 5) as f64));
    q /= C64::new(q.norm(), 0.0);
    for k in 0..k_max {
        let mut w = apply(&q);
        let a = q.dotc(&w).re;
        alpha.push(a);
        basis.push(q.clone());
        // Full reorthogonalisation (twice is enough).
        for _ in 0..2 {
            for v in &basis {
                let proj = v.dotc(&w);
                w -= v * proj;
            }
        }
        let b = w.norm();
        if k + 1 == k_max || b <= 1e-13 * (a.abs() + beta.last().copied().unwrap_or(0.0)).max(1e-300) {
            break;
        }
        beta.push(b);
        q = w / C64::new(b, 0.0);
    }
    let k = alpha.len();
    let t = nalgebra::DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = CMat::from_fn(n, n, |_, _| C64::new(next(), next()));
        &g * g.adjoint() + CMat::identity(n, n) * C64::new(0.1, 0.0)
    }

    #[test]
    fn gemm_matches_nalgebra() {
        let a = herm(45, 1);
        let b = herm(45, 2);
        let diff = (mul(&a, &b) - &a * &b).norm();
        assert!(diff < 1e-10 * (a.norm() * b.norm()));
    }

    #[test]
    fn blocked_cholesky_and_inverse() {
        for &n in &[1usize, 5, 33, 70, 101] {
            let a = herm(n, n as u64);
            let (l, li) = cholesky_with_inverse(&a).unwrap();
            assert!((&l * l.adjoint() - &a).norm() < 1e-9 * a.norm());
            assert!((&l * &li - CMat::identity(n, n)).norm() < 1e-9 * n as f64);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = herm(40, 9);
        a[(3, 3)] = C64::new(-5.0, 0.0);
        assert!(cholesky_with_inverse(&a).is_none());
    }

    #[test]
    fn lanczos_agrees_with_dense_eig() {
        let a = herm(60, 4) - CMat::identity(60, 60) * C64::new(3.0, 0.0);
        let exact = min_eigenvalue(&a);
        let est = lanczos_min_eig(60, 60, |v| &a * v);
        assert!((est - exact).abs() < 1e-8 * exact.abs().max(1.0));
    }

    #[test]
    fn kron_and_vec_identity() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let a = herm(3, 11);
        let x = herm(3, 12);
        let b = herm(3, 13);
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
