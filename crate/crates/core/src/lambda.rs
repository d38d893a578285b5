//! State space and field geometry of the four-level Λ system.
//!
//! Three degenerate ground sublevels `|g₋⟩, |gπ⟩, |g₊⟩` couple to one excited
//! level `|e⟩` through a single elliptically polarized pulse. The pulse
//! polarization `(θ, φ, μ₋, μ₊)` fixes a two-dimensional dark subspace of the
//! ground manifold; its orthogonal complement in the ground manifold is the
//! bright direction `|Φ⊥⟩`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cis, complex_normal, embed, hermitian_eigenvalues, hermiticity_defect, ket_bra,
    smallest_singular_pair, Ground, Mat4, Vec4, C64, EXCITED, ONE, ZERO,
};

/// Tolerances from the density-operator contract.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;

/// Threshold for linear independence of two spanning vectors.
pub const SPAN_TOL: f64 = 1e-10;

/// A density operator on `{|g₋⟩, |gπ⟩, |g₊⟩, |e⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator(Mat4);

impl DensityOperator {
    /// Validates Hermiticity, positivity and `0 < Tr ρ ≤ 1`.
    pub fn new(m: Mat4) -> Result<Self> {
        let rho = DensityOperator(m);
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by a trusted computation.
    pub fn from_matrix_unchecked(m: Mat4) -> Self {
        DensityOperator(m)
    }

    /// `|ψ⟩⟨ψ|` for a ground-space vector, normalized first.
    pub fn pure_ground(psi: &Ground) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidDensity(
                "zero or non-finite state vector".into(),
            ));
        }
        let v = embed(&(psi / C64::new(norm, 0.0)));
        Ok(DensityOperator(ket_bra(&v, &v)))
    }

    pub fn excited() -> Self {
        let mut m = Mat4::zeros();
        m[(EXCITED, EXCITED)] = ONE;
        DensityOperator(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.0)[0]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = hermiticity_defect(m);
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        let tr = self.trace();
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(Error::InvalidDensity(format!("trace {tr} outside (0, 1]")));
        }
        Ok(())
    }
}

/// Shared time dependence of the three polarization components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// Constant amplitude over the whole pulse.
    #[default]
    Square,
    /// Flat top with `sin²` rise and fall, each lasting a tenth of the pulse.
    SineSquared,
}

impl Envelope {
    const RAMP_FRACTION: f64 = 0.1;

    /// Envelope value in `[0, 1]` at time `t` into a pulse of length `duration`.
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        if t < 0.0 || t > duration {
            return 0.0;
        }
        match self {
            Envelope::Square => 1.0,
            Envelope::SineSquared => {
                let ramp = Self::RAMP_FRACTION * duration;
                let edge = t.min(duration - t);
                if edge >= ramp {
                    1.0
                } else {
                    (0.5 * PI * edge / ramp).sin().powi(2)
                }
            }
        }
    }
}

/// Parameters of one pulse.
///
/// Angles are radians; `omega_peak` and `delta` are in units of `γ_in` and
/// `duration` in units of `1/γ_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub theta: f64,
    pub phi: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default = "default_omega")]
    pub omega_peak: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "default_duration")]
    pub duration: f64,
}

fn default_omega() -> f64 {
    1.0
}

fn default_duration() -> f64 {
    1.0
}

/// Wrap into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl FieldParams {
    /// A square pulse with unit amplitude, zero detuning and unit duration.
    pub fn new(theta: f64, phi: f64, mu_minus: f64, mu_plus: f64) -> Self {
        FieldParams {
            theta,
            phi,
            mu_minus,
            mu_plus,
            xi: 0.0,
            omega_peak: default_omega(),
            delta: 0.0,
            envelope: Envelope::Square,
            duration: default_duration(),
        }
    }

    pub fn with_omega(mut self, omega_peak: f64) -> Self {
        self.omega_peak = omega_peak;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.theta, self.phi, self.mu_minus, self.mu_plus]
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("theta", self.theta),
            ("phi", self.phi),
            ("mu_minus", self.mu_minus),
            ("mu_plus", self.mu_plus),
            ("xi", self.xi),
            ("omega_peak", self.omega_peak),
            ("delta", self.delta),
            ("duration", self.duration),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::InvalidField(format!("{name} is not finite")));
            }
        }
        if self.omega_peak <= 0.0 {
            return Err(Error::InvalidField("omega_peak must be positive".into()));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidField("duration must be positive".into()));
        }
        Ok(())
    }

    /// Same physical pulse with `θ ∈ [0, π]` and all phases in `[0, 2π)`.
    ///
    /// `θ → −θ` together with `μ± → μ± + π` leaves `|Φ⊥⟩` and the Hamiltonian
    /// unchanged, which is how out-of-range polar angles are folded back.
    pub fn canonical(&self) -> Self {
        let mut out = *self;
        let mut theta = wrap_angle(self.theta);
        let mut shift = 0.0;
        if theta > PI {
            theta = TAU - theta;
            shift = PI;
        }
        out.theta = theta;
        out.phi = wrap_angle(self.phi);
        out.mu_minus = wrap_angle(self.mu_minus + shift);
        out.mu_plus = wrap_angle(self.mu_plus + shift);
        out.xi = wrap_angle(self.xi);
        out
    }

    /// Bright-state amplitudes `[e^{iμ₋} sinθ sinφ, −cosθ, e^{iμ₊} sinθ cosφ]`.
    fn bright_amplitudes(&self) -> Ground {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Ground::new(
            cis(self.mu_minus) * (st * sp),
            C64::new(-ct, 0.0),
            cis(self.mu_plus) * (st * cp),
        )
    }
}

/// `H/ħ` at instantaneous Rabi amplitude `omega_peak · envelope_value`.
///
/// The couplings are `Ω₋ = (Ω/3) e^{iξ} e^{iμ₋} sinθ sinφ`,
/// `Ωπ = −(Ω/3) e^{iξ} cosθ`, `Ω₊ = (Ω/3) e^{iξ} e^{iμ₊} sinθ cosφ`, entering
/// as `Ω_q/2` on `|g_q⟩⟨e|`, plus `Δ |e⟩⟨e|`.
pub fn build_hamiltonian(fp: &FieldParams, envelope_value: f64) -> Mat4 {
    let mut h = drive_hamiltonian(fp) * C64::new(envelope_value, 0.0);
    h[(EXCITED, EXCITED)] += C64::new(fp.delta, 0.0);
    h
}

/// The envelope-proportional part of the Hamiltonian at unit envelope.
pub fn drive_hamiltonian(fp: &FieldParams) -> Mat4 {
    let rabi = fp.bright_amplitudes() * (cis(fp.xi) * (fp.omega_peak / 3.0));
    let mut h = Mat4::zeros();
    for q in 0..3 {
        h[(q, EXCITED)] = rabi[q] * 0.5;
        h[(EXCITED, q)] = rabi[q].conj() * 0.5;
    }
    h
}

/// The two dark vectors, the bright ground vector and the dark projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkBasis {
    pub n1: Ground,
    pub n2: Ground,
    pub phi_perp: Ground,
    pub projector: Mat4,
}

impl DarkBasis {
    fn assemble(n1: Ground, n2: Ground, phi_perp: Ground) -> Self {
        let e1 = embed(&n1);
        let e2 = embed(&n2);
        let projector = ket_bra(&e1, &e1) + ket_bra(&e2, &e2);
        DarkBasis {
            n1,
            n2,
            phi_perp,
            projector,
        }
    }

    /// Orthonormal basis of `span{ψ1, ψ2}` in the same layout as a dark basis:
    /// `n1 ∝ ψ1`, `n2` its Gram–Schmidt partner, `phi_perp` the unit normal.
    pub fn from_span(psi1: &Ground, psi2: &Ground) -> Result<Self> {
        let smin = smallest_singular_pair(psi1, psi2);
        if !(smin >= SPAN_TOL) {
            return Err(Error::DegenerateSpan(smin));
        }
        let n1 = psi1.normalize();
        let rest = psi2 - n1 * n1.dotc(psi2);
        let n2 = rest.normalize();
        let normal = complex_normal(&n1, &n2).normalize();
        Ok(Self::assemble(n1, n2, normal))
    }

    pub fn n1_ket(&self) -> Vec4 {
        embed(&self.n1)
    }

    pub fn n2_ket(&self) -> Vec4 {
        embed(&self.n2)
    }

    pub fn phi_perp_ket(&self) -> Vec4 {
        embed(&self.phi_perp)
    }
}

/// Dark vectors
/// `n1 = [e^{iμ₋} cosθ sinφ, sinθ, e^{iμ₊} cosθ cosφ]`,
/// `n2 = [−e^{−iμ₊} cosφ, 0, e^{−iμ₋} sinφ]` and the bright vector.
pub fn dark_basis(fp: &FieldParams) -> DarkBasis {
    let (st, ct) = fp.theta.sin_cos();
    let (sp, cp) = fp.phi.sin_cos();
    let n1 = Ground::new(
        cis(fp.mu_minus) * (ct * sp),
        C64::new(st, 0.0),
        cis(fp.mu_plus) * (ct * cp),
    );
    let n2 = Ground::new(-cis(-fp.mu_plus) * cp, ZERO, cis(-fp.mu_minus) * sp);
    DarkBasis::assemble(n1, n2, fp.bright_amplitudes())
}

/// The ground-space vector coupled to the excited state.
pub fn orthogonal_state(fp: &FieldParams) -> Ground {
    fp.bright_amplitudes()
}

/// Polarization whose dark subspace is a prescribed plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanField {
    pub field: FieldParams,
    /// Set when `sinθ ≈ 0`: the pulse is purely π-polarized and `φ, μ±` were
    /// fixed to zero by convention.
    pub angle_underdetermined: bool,
}

/// Solve for `(θ, φ, μ₋, μ₊)` with `span{n1, n2} = span{ψ1, ψ2}`.
///
/// The bright vector must be the unit normal `c` of the plane. Its phase is
/// fixed so that `c_π` is real and nonnegative, then `θ = arccos(−c_π)`,
/// `μ± = arg c±` and `φ = atan2(|c₋|, |c₊|)`. The remaining fields take the
/// [`FieldParams::new`] defaults.
pub fn field_for_span(psi1: &Ground, psi2: &Ground) -> Result<SpanField> {
    let smin = smallest_singular_pair(psi1, psi2);
    if !(smin >= SPAN_TOL) {
        return Err(Error::DegenerateSpan(smin));
    }
    let mut normal = complex_normal(psi1, psi2).normalize();
    let pi_amp = normal[1].norm();
    if pi_amp > 0.0 {
        let gauge = normal[1].conj() / pi_amp;
        normal *= gauge;
    }
    let c_pi = normal[1].re.clamp(-1.0, 1.0);
    let theta = (-c_pi).acos();
    let sin_theta = theta.sin();
    let underdetermined = sin_theta < 1e-12;
    let (phi, mu_minus, mu_plus) = if underdetermined {
        (0.0, 0.0, 0.0)
    } else {
        (
            normal[0].norm().atan2(normal[2].norm()),
            wrap_angle(normal[0].arg()),
            wrap_angle(normal[2].arg()),
        )
    };
    Ok(SpanField {
        field: FieldParams::new(theta, phi, mu_minus, mu_plus),
        angle_underdetermined: underdetermined,
    })
}

/// Prescribed final state `p1 |ψ1⟩⟨ψ1| + p2 |ψ2⟩⟨ψ2|` on the ground manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub weights: (f64, f64),
    pub psi1: Ground,
    pub psi2: Ground,
}

impl TargetState {
    pub fn new(weights: (f64, f64), psi1: Ground, psi2: Ground) -> Result<Self> {
        let (p1, p2) = weights;
        if !(p1.is_finite() && p2.is_finite()) || p1 < 0.0 || p2 < 0.0 {
            return Err(Error::InvalidTarget(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if ((p1 + p2) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTarget(format!(
                "weights sum to {}, not 1",
                p1 + p2
            )));
        }
        for (name, v) in [("psi1", &psi1), ("psi2", &psi2)] {
            let n = v.norm();
            if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTarget(format!(
                    "{name} has norm {n}, expected 1"
                )));
            }
        }
        let smin = smallest_singular_pair(&psi1, &psi2);
        if !(smin > SPAN_TOL) {
            return Err(Error::InvalidTarget(format!(
                "psi1 and psi2 are linearly dependent (smallest singular value {smin:e})"
            )));
        }
        let target = TargetState {
            weights,
            psi1,
            psi2,
        };
        target
            .rho()
            .validate()
            .map_err(|e| Error::InvalidTarget(e.to_string()))?;
        Ok(target)
    }

    pub fn rho(&self) -> DensityOperator {
        let a = embed(&self.psi1);
        let b = embed(&self.psi2);
        let m = ket_bra(&a, &a) * C64::new(self.weights.0, 0.0)
            + ket_bra(&b, &b) * C64::new(self.weights.1, 0.0);
        DensityOperator::from_matrix_unchecked(m)
    }

    /// Orthonormalized target plane, used as the final-stage Bloch frame.
    pub fn span_basis(&self) -> DarkBasis {
        DarkBasis::from_span(&self.psi1, &self.psi2)
            .expect("validated target has independent vectors")
    }
}

/// Coordinates of a state projected onto a two-dimensional dark plane.
///
/// `x, y, z` are the unnormalized Pauli expectations of the projected block;
/// divide by `in_span_weight` for a point on or inside the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub in_span_weight: f64,
}

impl BlochPoint {
    pub fn normalized(&self) -> BlochPoint {
        if self.in_span_weight > 0.0 {
            let w = self.in_span_weight;
            BlochPoint {
                x: self.x / w,
                y: self.y / w,
                z: self.z / w,
                in_span_weight: 1.0,
            }
        } else {
            *self
        }
    }

    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Pauli coordinates of `ρ` in the frame `(n1, n2)`, with `σ_z = |n1⟩⟨n1| − |n2⟩⟨n2|`.
pub fn bloch_coords(rho: &DensityOperator, basis: &DarkBasis) -> BlochPoint {
    let a = basis.n1_ket();
    let b = basis.n2_ket();
    let m = rho.matrix();
    let r11 = a.dotc(&(m * a)).re;
    let r22 = b.dotc(&(m * b)).re;
    let r12 = a.dotc(&(m * b));
    BlochPoint {
        x: 2.0 * r12.re,
        y: -2.0 * r12.im,
        z: r11 - r22,
        in_span_weight: r11 + r22,
    }
}
