//! Small dense linear-algebra helpers shared by the physics modules.
//!
//! Operators on the four-level space are `4×4` complex matrices in the ordered
//! basis `{|g₋⟩, |gπ⟩, |g₊⟩, |e⟩}`. Superoperators act on the row-major
//! vectorization `r[4 i + j] = ρ[i, j]`, so the Euclidean inner product of two
//! vectorized operators is the Hilbert–Schmidt product `Tr{ρ₁† ρ₂}`.

use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, SVector, Vector3, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Mat3 = Matrix3<C64>;
pub type Vec4 = Vector4<C64>;
pub type Ground = Vector3<C64>;
pub type Vec16 = SVector<C64, 16>;
pub type Mat16 = SMatrix<C64, 16, 16>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Index of the excited state in the ordered basis.
pub const EXCITED: usize = 3;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Row-major vectorization.
pub fn vectorize(rho: &Mat4) -> Vec16 {
    Vec16::from_fn(|k, _| rho[(k / 4, k % 4)])
}

pub fn unvectorize(r: &Vec16) -> Mat4 {
    Mat4::from_fn(|i, j| r[4 * i + j])
}

/// Embed a ground-space vector into the four-level space.
pub fn embed(v: &Ground) -> Vec4 {
    Vec4::new(v[0], v[1], v[2], ZERO)
}

/// `|a⟩⟨b|` on the four-level space.
pub fn ket_bra(a: &Vec4, b: &Vec4) -> Mat4 {
    a * b.adjoint()
}

pub fn basis_ket(k: usize) -> Vec4 {
    let mut v = Vec4::zeros();
    v[k] = ONE;
    v
}

pub fn projector_onto(v: &Vec4) -> Mat4 {
    ket_bra(v, v)
}

/// `Tr{A B}`.
pub fn trace_product(a: &Mat4, b: &Mat4) -> C64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for k in 0..4 {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(m: &Mat4) -> f64 {
    m.norm()
}

/// Largest `|m_ij − conj(m_ji)|`.
pub fn hermiticity_defect(m: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let mut out = [eig[0], eig[1], eig[2], eig[3]];
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Orthonormal basis of the column span of `m`, discarding directions whose
/// singular value falls below `rel_tol` times the largest one.
pub fn orthonormal_span(m: &DMatrix<C64>, rel_tol: f64) -> DMatrix<C64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > rel_tol * smax)
        .collect();
    DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Sine of the largest principal angle between the column spans of `a` and
/// `b`. Returns 1 when the spans have different dimension.
///
/// Computed from the residual of projecting one orthonormal basis onto the
/// other, which stays accurate for tiny angles where `acos` of the cosines
/// would not.
pub fn max_principal_sine(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let qa = orthonormal_span(a, 1e-12);
    let qb = orthonormal_span(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    let s = resid.singular_values();
    s.max().min(1.0)
}

/// Stack 16-vectors as the columns of a dynamic matrix.
pub fn columns(vs: &[Vec16]) -> DMatrix<C64> {
    DMatrix::from_fn(16, vs.len(), |i, j| vs[j][i])
}

/// Smallest singular value of the `3×2` matrix `[a b]`.
pub fn smallest_singular_pair(a: &Ground, b: &Ground) -> f64 {
    let m = SMatrix::<C64, 3, 2>::from_columns(&[*a, *b]);
    let s = m.singular_values();
    s.min()
}

/// Ground-space vector orthogonal to both `a` and `b` (complex cross product,
/// conjugated so that `⟨n|a⟩ = ⟨n|b⟩ = 0`). Not normalized.
pub fn complex_normal(a: &Ground, b: &Ground) -> Ground {
    Ground::new(
        (a[1] * b[2] - a[2] * b[1]).conj(),
        (a[2] * b[0] - a[0] * b[2]).conj(),
        (a[0] * b[1] - a[1] * b[0]).conj(),
    )
}
