//! Relaxation maps restricted to the ground manifold as `9×9` matrices.
//!
//! The maps are affine on the trace-one hyperplane; replacing the constant
//! `1` by `Tr ρ` makes them linear, so a whole pulse sequence collapses into
//! one matrix product. Combined with the first two moments of the initial
//! states this gives the mean squared distance over any state set in
//! `O(1)` per sequence instead of `O(#states)`.

use nalgebra::{SMatrix, SVector};

use crate::lambda::{dark_basis, FieldParams};
use crate::linalg::{c, Ground, Mat4, C64, ZERO};
use crate::liouvillian::Mode;
use crate::relax::{rho_tilde, PulseSequence};

pub type GroundVec = SVector<C64, 9>;
pub type GroundMap = SMatrix<C64, 9, 9>;

/// Row-major vectorization of the ground block of a four-level operator.
pub fn ground_vec(m: &Mat4) -> GroundVec {
    GroundVec::from_fn(|k, _| m[(k / 3, k % 3)])
}

pub fn pure_ground_vec(psi: &Ground) -> GroundVec {
    GroundVec::from_fn(|k, _| psi[k / 3] * psi[k % 3].conj())
}

/// Linear version of one relaxation step on ground-manifold operators.
pub fn step_map(fp: &FieldParams, mode: Mode) -> GroundMap {
    let basis = dark_basis(fp);
    let p = basis.projector.fixed_view::<3, 3>(0, 0).into_owned();
    let vec_p = GroundVec::from_fn(|k, _| p[(k / 3, k % 3)]);
    // ½ (Tr ρ − Tr Pρ) P
    let refill_row = GroundVec::from_fn(|k, _| {
        let (i, j) = (k / 3, k % 3);
        let id = if i == j { c(1.0, 0.0) } else { ZERO };
        (id - p[(j, i)]) * 0.5
    });
    let mut map = GroundMap::from_fn(|row, col| {
        let (i, j) = (row / 3, row % 3);
        let (k, l) = (col / 3, col % 3);
        p[(i, k)] * p[(l, j)] + vec_p[row] * refill_row[col]
    });
    if mode == Mode::Beta {
        let tilde = rho_tilde(fp).into_matrix();
        let t3 = tilde.fixed_view::<3, 3>(0, 0).into_owned();
        let residue = t3 - p * t3 * p;
        for row in 0..9 {
            for diag in 0..3 {
                map[(row, 4 * diag)] += residue[(row / 3, row % 3)];
            }
        }
    }
    map
}

/// Product of the step maps, first pulse applied first.
pub fn sequence_map(seq: &PulseSequence) -> GroundMap {
    seq.steps.iter().fold(GroundMap::identity(), |acc, fp| {
        step_map(fp, seq.mode) * acc
    })
}

/// First and second moments of a set of vectorized pure states.
///
/// For any linear `S` and target `f`,
/// `mean_i |S v_i − f|² = |S m − f|² + |S L|_F²` where `m` is the mean and
/// `L L† = mean_i (v_i − m)(v_i − m)†`. Both terms are sums of squares, so
/// small objectives do not suffer cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMoments {
    pub mean: GroundVec,
    pub factor: GroundMap,
    pub count: usize,
}

impl StateMoments {
    pub fn new(states: &[Ground]) -> Self {
        let n = states.len().max(1) as f64;
        let vecs: Vec<GroundVec> = states.iter().map(pure_ground_vec).collect();
        let mean = vecs.iter().fold(GroundVec::zeros(), |a, v| a + v) / c(n, 0.0);
        let cov = vecs.iter().fold(GroundMap::zeros(), |a, v| {
            let d = v - mean;
            a + d * d.adjoint()
        }) / c(n, 0.0);
        let cov = (cov + cov.adjoint()) * c(0.5, 0.0);
        let eig = cov.symmetric_eigen();
        let mut factor = eig.eigenvectors;
        for k in 0..9 {
            let w = eig.eigenvalues[k].max(0.0).sqrt();
            for r in 0..9 {
                factor[(r, k)] *= w;
            }
        }
        StateMoments {
            mean,
            factor,
            count: states.len(),
        }
    }

    /// Mean squared Hilbert–Schmidt distance between `S v_i` and `target`.
    pub fn mean_squared_distance(&self, map: &GroundMap, target: &GroundVec) -> f64 {
        (map * self.mean - target).norm_squared() + (map * self.factor).norm_squared()
    }
}
