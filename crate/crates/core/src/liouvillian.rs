//! Vectorized master-equation generator `dr/dt = M r + d` and its spectral
//! structure.
//!
//! The linear part `M` collects the coherent term `−i[H, ρ]`, spontaneous
//! decay into the three ground sublevels with `L_q = |g_q⟩⟨e|/√3` at rate
//! `γ_in`, loss out of the system `−(γ_ext/2){|e⟩⟨e|, ρ}` and the
//! trace-dependent part `−R_p Tr{ρ} |e⟩⟨e|` of the repump. The constant
//! repump `R_p |e⟩⟨e|` is the drive vector `d`.

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{drive_hamiltonian, DarkBasis, DensityOperator, FieldParams};
use crate::linalg::{
    basis_ket, c, columns, ket_bra, max_principal_sine, projector_onto, unvectorize, vectorize,
    Mat16, Mat4, Vec16, C64, EXCITED, I,
};
use crate::relax::rho_tilde;

/// Relative singular-value threshold that defines the numerical null space.
pub const NULL_REL_TOL: f64 = 1e-10;
/// Eigenvalues with real part above this are reported as unstable.
pub const UNSTABLE_TOL: f64 = 1e-9;
/// Eigenvalues with modulus below this fraction of the spectral radius count as zero.
pub const ZERO_EIG_REL_TOL: f64 = 1e-9;

/// Which relaxation regime the rates describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closed system: no external loss, no repump.
    Alpha,
    /// External loss compensated by an incoherent repump of `|e⟩`.
    Beta,
}

impl Mode {
    /// Expected dimension of the zero subspace.
    pub fn zero_dimension(&self) -> usize {
        match self {
            Mode::Alpha => 4,
            Mode::Beta => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub gamma_in: f64,
    #[serde(default)]
    pub gamma_ext: f64,
    #[serde(default)]
    pub r_pump: f64,
    pub mode: Mode,
}

impl Rates {
    pub fn alpha(gamma_in: f64) -> Self {
        Rates {
            gamma_in,
            gamma_ext: 0.0,
            r_pump: 0.0,
            mode: Mode::Alpha,
        }
    }

    pub fn beta(gamma_in: f64, gamma_ext: f64, r_pump: f64) -> Self {
        Rates {
            gamma_in,
            gamma_ext,
            r_pump,
            mode: Mode::Beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_in.is_finite() && self.gamma_in > 0.0) {
            return Err(Error::InvalidRates("gamma_in must be positive".into()));
        }
        if !(self.gamma_ext.is_finite() && self.r_pump.is_finite())
            || self.gamma_ext < 0.0
            || self.r_pump < 0.0
        {
            return Err(Error::InvalidRates(
                "gamma_ext and r_pump must be finite and nonnegative".into(),
            ));
        }
        match self.mode {
            Mode::Alpha if self.gamma_ext != 0.0 || self.r_pump != 0.0 => Err(Error::InvalidRates(
                "mode alpha requires gamma_ext = 0 and r_pump = 0".into(),
            )),
            Mode::Beta if self.gamma_ext <= 0.0 || self.r_pump <= 0.0 => Err(Error::InvalidRates(
                "mode beta requires gamma_ext > 0 and r_pump > 0".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Matrix of the linear map `ρ ↦ f(ρ)` on row-major vectorized operators.
pub fn superoperator(f: impl Fn(&Mat4) -> Mat4) -> Mat16 {
    let mut m = Mat16::zeros();
    for col in 0..16 {
        let mut unit = Mat4::zeros();
        unit[(col / 4, col % 4)] = c(1.0, 0.0);
        m.set_column(col, &vectorize(&f(&unit)));
    }
    m
}

/// Generator pieces with the envelope dependence kept separate, so that
/// `M(t) = fixed + E(t) · drive`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParts {
    pub fixed: Mat16,
    pub drive: Mat16,
    pub d: Vec16,
}

impl GeneratorParts {
    pub fn new(fp: &FieldParams, rates: &Rates) -> Self {
        let h_drive = drive_hamiltonian(fp);
        let mut h_det = Mat4::zeros();
        h_det[(EXCITED, EXCITED)] = c(fp.delta, 0.0);

        let e = basis_ket(EXCITED);
        let l_e = projector_onto(&e);
        let jumps: Vec<Mat4> = (0..3)
            .map(|q| ket_bra(&basis_ket(q), &e) * c((1.0 / 3.0f64).sqrt(), 0.0))
            .collect();
        let gamma_in = rates.gamma_in;
        let gamma_ext = rates.gamma_ext;
        let r_pump = rates.r_pump;

        let fixed = superoperator(|rho| {
            let mut out = (h_det * rho - rho * h_det) * (-I);
            for l in &jumps {
                let ldl = l.adjoint() * l;
                out += (l * rho * l.adjoint() * c(2.0, 0.0) - ldl * rho - rho * ldl)
                    * c(0.5 * gamma_in, 0.0);
            }
            out -= (l_e * rho + rho * l_e) * c(0.5 * gamma_ext, 0.0);
            out -= l_e * (rho.trace() * r_pump);
            out
        });
        let drive = superoperator(|rho| (h_drive * rho - rho * h_drive) * (-I));
        let d = vectorize(&(l_e * c(r_pump, 0.0)));
        GeneratorParts { fixed, drive, d }
    }

    pub fn at(&self, envelope_value: f64) -> Mat16 {
        self.fixed + self.drive * c(envelope_value, 0.0)
    }
}

/// The generator at a fixed envelope value.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub m: Mat16,
    pub d: Vec16,
    pub rates: Rates,
    pub field: FieldParams,
}

impl Liouvillian {
    /// `unvec(M vec ρ + d)`.
    pub fn apply(&self, rho: &Mat4) -> Mat4 {
        unvectorize(&(self.m * vectorize(rho) + self.d))
    }
}

pub fn build_liouvillian(fp: &FieldParams, rates: &Rates, envelope_value: f64) -> Liouvillian {
    let parts = GeneratorParts::new(fp, rates);
    Liouvillian {
        m: parts.at(envelope_value),
        d: parts.d,
        rates: *rates,
        field: *fp,
    }
}

/// Biorthonormal right and left zero modes of `M`.
///
/// Left modes are null vectors of `M†`, so `(left_k | right_l) = δ_kl` under
/// the Euclidean product `Σ conj(a_s) b_s = Tr{ρ_a† ρ_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSubspace {
    pub right: Vec<Vec16>,
    pub left: Vec<Vec16>,
    pub dimension: usize,
}

impl ZeroSubspace {
    /// `Σ_k (left_k | r) right_k`, the spectral projection onto the zero modes.
    pub fn project(&self, r: &Vec16) -> Vec16 {
        self.left
            .iter()
            .zip(&self.right)
            .fold(Vec16::zeros(), |acc, (l, rr)| acc + rr * l.dotc(r))
    }

    /// Largest entry of `(left | right) − 1`.
    pub fn biorthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, l) in self.left.iter().enumerate() {
            for (j, r) in self.right.iter().enumerate() {
                let target = if k == j { 1.0 } else { 0.0 };
                worst = worst.max((l.dotc(r) - c(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn right_matrix(&self) -> DMatrix<C64> {
        columns(&self.right)
    }

    pub fn left_matrix(&self) -> DMatrix<C64> {
        columns(&self.left)
    }
}

/// Null-space numbers that are reported alongside the zero modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroDiagnostics {
    pub dimension: usize,
    /// Residuals below are relative, `|M v| / (|M|_F |v|)`.
    /// Singular values of `M`, descending.
    pub singular_values: Vec<f64>,
    pub max_right_residual: f64,
    pub max_left_residual: f64,
    pub biorthonormality_defect: f64,
    /// Largest principal-angle sine between the left and right zero spans.
    pub left_right_sine: f64,
    /// Largest principal-angle sine between the null space of `M†` and that
    /// of the plain transpose `Mᵀ`.
    pub transpose_reading_sine: f64,
}

/// Right null vectors of `m` from the `V` factor of its SVD, with the
/// singular values in descending order.
fn right_null(m: &Mat16) -> (Vec<Vec16>, Vec<f64>) {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let smax = s.max();
    let null = (0..16)
        .filter(|&k| s[k] <= NULL_REL_TOL * smax)
        .map(|k| v_t.row(k).adjoint().into_owned())
        .collect();
    let mut sorted: Vec<f64> = s.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    (null, sorted)
}

// The left modes come from a second decomposition of `M†` rather than from
// `U` of the first: the `U` columns belonging to zero singular values are
// markedly less accurate when small nonzero singular values cluster nearby.
fn null_spaces(m: &Mat16) -> (Vec<Vec16>, Vec<Vec16>, Vec<f64>) {
    let (right, sorted) = right_null(m);
    let (left, _) = right_null(&m.adjoint());
    (right, left, sorted)
}

fn biorthonormalize(right: Vec<Vec16>, left: Vec<Vec16>) -> Result<ZeroSubspace> {
    let k = right.len();
    let r = columns(&right);
    let l = columns(&left);
    let gram = l.adjoint() * &r;
    let inv = gram
        .try_inverse()
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let l = l * inv.adjoint();
    let left = (0..k).map(|j| Vec16::from_fn(|i, _| l[(i, j)])).collect();
    Ok(ZeroSubspace {
        right,
        left,
        dimension: k,
    })
}

fn checked_null_spaces(l: &Liouvillian) -> Result<(Vec<Vec16>, Vec<Vec16>, Vec<f64>)> {
    let (right, left, s) = null_spaces(&l.m);
    let expected = l.rates.mode.zero_dimension();
    if right.len() != expected || left.len() != expected {
        return Err(Error::UnexpectedDimension {
            expected,
            found: right.len(),
        });
    }
    Ok((right, left, s))
}

/// Numerical zero subspace of `M` (of the homogeneous part in mode beta).
pub fn zero_subspace(l: &Liouvillian) -> Result<ZeroSubspace> {
    let (right, left, _) = checked_null_spaces(l)?;
    biorthonormalize(right, left)
}

pub fn zero_diagnostics(l: &Liouvillian) -> Result<ZeroDiagnostics> {
    let (right, left, singular_values) = checked_null_spaces(l)?;
    let left_span = columns(&left);
    let conj_span = left_span.map(|z| z.conj());
    let left_right_sine = max_principal_sine(&left_span, &columns(&right));
    let transpose_reading_sine = max_principal_sine(&left_span, &conj_span);
    let zs = biorthonormalize(right, left)?;
    let m_adj = l.m.adjoint();
    let scale = l.m.norm();
    let max_right_residual = zs
        .right
        .iter()
        .map(|r| (l.m * r).norm() / (scale * r.norm()))
        .fold(0.0, f64::max);
    let max_left_residual = zs
        .left
        .iter()
        .map(|v| (m_adj * v).norm() / (scale * v.norm()))
        .fold(0.0, f64::max);
    Ok(ZeroDiagnostics {
        dimension: zs.dimension,
        singular_values,
        max_right_residual,
        max_left_residual,
        biorthonormality_defect: zs.biorthonormality_defect(),
        left_right_sine,
        transpose_reading_sine,
    })
}

/// Closed-form zero modes built from the dark states.
///
/// Right modes: `(|1⟩⟨1| − |2⟩⟨2|)/√2`, `(|1⟩⟨2| + |2⟩⟨1|)/√2`,
/// `i(|2⟩⟨1| − |1⟩⟨2|)/√2`, `(|1⟩⟨1| + |2⟩⟨2|)/√2`. Left modes repeat the
/// first three, and the fourth is `Î/√2`. Mode beta keeps only the first three.
pub fn closed_form_zero_modes(basis: &DarkBasis, mode: Mode) -> ZeroSubspace {
    let a = basis.n1_ket();
    let b = basis.n2_ket();
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let aa = ket_bra(&a, &a);
    let bb = ket_bra(&b, &b);
    let ab = ket_bra(&a, &b);
    let ba = ket_bra(&b, &a);
    let mut right = vec![
        vectorize(&((aa - bb) * s)),
        vectorize(&((ab + ba) * s)),
        vectorize(&((ba - ab) * (I * s))),
    ];
    let mut left = right.clone();
    if mode == Mode::Alpha {
        right.push(vectorize(&((aa + bb) * s)));
        left.push(vectorize(&(Mat4::identity() * s)));
    }
    let dimension = right.len();
    ZeroSubspace {
        right,
        left,
        dimension,
    }
}

/// Affine steady state `r̃` with `M′ r̃ = −d`.
///
/// The zero modes are deflated, `(M + R L†) r = −d + R L† r_ref`, which is
/// nonsingular and forces `L† r = L† r_ref`; the null-space component is
/// thus taken from the dark-state solution `r_ref`. Fails when the solution
/// does not satisfy the system or departs from `r_ref`.
pub fn steady_affine(l: &Liouvillian) -> Result<DensityOperator> {
    if l.rates.mode != Mode::Beta {
        return Err(Error::InvalidArgument(
            "steady_affine requires mode beta".into(),
        ));
    }
    let zs = zero_subspace(l)?;
    let right = zs.right_matrix();
    let left = zs.left_matrix();
    let reference = vectorize(rho_tilde(&l.field).matrix());
    let deflated = DMatrix::from_fn(16, 16, |i, j| l.m[(i, j)]) + &right * left.adjoint();
    let ref_dyn = DVector::from_fn(16, |i, _| reference[i]);
    let rhs = DVector::from_fn(16, |i, _| -l.d[i]) + &right * (left.adjoint() * ref_dyn);
    let sol = deflated
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let r = Vec16::from_fn(|i, _| sol[i]);
    let residual = (l.m * r + l.d).norm();
    let departure = (r - reference).norm();
    let mismatch = residual.max(departure);
    if !(mismatch < 1e-9) {
        return Err(Error::SingularSystem(mismatch));
    }
    let mut m = unvectorize(&r);
    m = (m + m.adjoint()) * c(0.5, 0.0);
    Ok(DensityOperator::from_matrix_unchecked(m))
}

/// All sixteen eigenvalues of `M`, from a complex Schur decomposition.
pub fn spectrum(l: &Liouvillian) -> Result<Vec<C64>> {
    let schur = Schur::try_new(l.m, 1e-15, 100_000).ok_or(Error::EigenFailure)?;
    let (_, t) = schur.unpack();
    let mut eig: Vec<C64> = (0..16).map(|k| t[(k, k)]).collect();
    for k in 0..15 {
        if t[(k + 1, k)].norm() > 1e-12 * t.norm() {
            return Err(Error::EigenFailure);
        }
    }
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

/// `min |Re λ|` over the nonzero eigenvalues of `M`.
pub fn slowest_rate(l: &Liouvillian) -> Result<f64> {
    let eig = spectrum(l)?;
    slowest_rate_of(&eig)
}

pub fn slowest_rate_of(eig: &[C64]) -> Result<f64> {
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(bad) = eig
        .iter()
        .map(|z| z.re)
        .filter(|&re| re > UNSTABLE_TOL)
        .reduce(f64::max)
    {
        return Err(Error::UnstableSpectrum(bad));
    }
    eig.iter()
        .filter(|z| z.norm() > ZERO_EIG_REL_TOL * radius)
        .map(|z| z.re.abs())
        .reduce(f64::min)
        .ok_or(Error::InvalidArgument(
            "generator has no nonzero eigenvalue".into(),
        ))
}

/// `Tr{unvec(M vec ρ + d)}` expected from the rate equations:
/// `−γ_ext ρ_ee + R_p (1 − Tr ρ)`.
pub fn expected_trace_flow(rates: &Rates, rho: &Mat4) -> f64 {
    -rates.gamma_ext * rho[(EXCITED, EXCITED)].re + rates.r_pump * (1.0 - rho.trace().re)
}
