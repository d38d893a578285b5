//! Asymptotic input–output maps of a single relaxation pulse, their
//! composition over a pulse sequence, and the distances used to score the
//! result.
//!
//! Once a pulse has relaxed the atom, only the projection `ρ′ = P_D ρ P_D`
//! onto the pulse's dark plane survives; the population that was bright
//! comes back spread evenly over the dark plane:
//! `T(ρ) = ρ′ + ½(1 − Tr ρ′) P_D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{dark_basis, DarkBasis, DensityOperator, FieldParams};
use crate::linalg::{c, cis, trace_product, Mat4};
use crate::liouvillian::Mode;

/// Inputs must have unit trace to this tolerance.
pub const MAP_TRACE_TOL: f64 = 1e-9;

fn check_trace(rho: &DensityOperator) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > MAP_TRACE_TOL {
        return Err(Error::TraceMismatch(tr));
    }
    Ok(())
}

fn relax_into(rho: &Mat4, projector: &Mat4) -> Mat4 {
    let inner = projector * rho * projector;
    let refill = 0.5 * (1.0 - inner.trace().re);
    inner + projector * c(refill, 0.0)
}

/// Relaxation without external loss.
pub fn apply_ta(rho: &DensityOperator, basis: &DarkBasis) -> Result<DensityOperator> {
    check_trace(rho)?;
    Ok(DensityOperator::from_matrix_unchecked(relax_into(
        rho.matrix(),
        &basis.projector,
    )))
}

/// Constant solution of the repumped dynamics,
/// `sin²φ |g₊⟩⟨g₊| + cos²φ |g₋⟩⟨g₋| − ½(e^{i(μ₊−μ₋)} sin2φ |g₊⟩⟨g₋| + h.c.)`.
pub fn rho_tilde(fp: &FieldParams) -> DensityOperator {
    let (sp, cp) = fp.phi.sin_cos();
    let mut m = Mat4::zeros();
    m[(2, 2)] = c(sp * sp, 0.0);
    m[(0, 0)] = c(cp * cp, 0.0);
    let off = cis(fp.mu_plus - fp.mu_minus) * (-0.5 * (2.0 * fp.phi).sin());
    m[(2, 0)] = off;
    m[(0, 2)] = off.conj();
    DensityOperator::from_matrix_unchecked(m)
}

/// Relaxation with external loss and repump:
/// `T_b(ρ) = ρ̃ − ρ̃′ + ρ′ + ½(1 − Tr ρ′) P_D`.
pub fn apply_tb(rho: &DensityOperator, fp: &FieldParams) -> Result<DensityOperator> {
    check_trace(rho)?;
    let basis = dark_basis(fp);
    Ok(DensityOperator::from_matrix_unchecked(tb_matrix(
        rho.matrix(),
        fp,
        &basis,
    )))
}

fn tb_matrix(rho: &Mat4, fp: &FieldParams, basis: &DarkBasis) -> Mat4 {
    let p = &basis.projector;
    let tilde = *rho_tilde(fp).matrix();
    tilde - p * tilde * p + relax_into(rho, p)
}

/// Apply the map of the given mode for one pulse.
pub fn apply_step(rho: &DensityOperator, fp: &FieldParams, mode: Mode) -> Result<DensityOperator> {
    match mode {
        Mode::Alpha => apply_ta(rho, &dark_basis(fp)),
        Mode::Beta => apply_tb(rho, fp),
    }
}

/// Ordered pulses that share one relaxation regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub steps: Vec<FieldParams>,
    pub mode: Mode,
}

impl PulseSequence {
    pub fn new(steps: Vec<FieldParams>, mode: Mode) -> Result<Self> {
        let seq = PulseSequence { steps, mode };
        seq.validate()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.steps.iter().try_for_each(FieldParams::validate)
    }

    /// Flat `(θ, φ, μ₋, μ₊)` per step.
    pub fn angle_vector(&self) -> Vec<f64> {
        self.steps.iter().flat_map(|s| s.angles()).collect()
    }

    /// Sequence of canonicalized pulses; physically identical.
    pub fn canonical(&self) -> Self {
        PulseSequence {
            steps: self.steps.iter().map(FieldParams::canonical).collect(),
            mode: self.mode,
        }
    }
}

/// Final state after every pulse of the sequence, in order.
pub fn compose_sequence(rho_in: &DensityOperator, seq: &PulseSequence) -> Result<DensityOperator> {
    seq.steps
        .iter()
        .try_fold(*rho_in, |rho, fp| apply_step(&rho, fp, seq.mode))
}

/// Every intermediate state, starting with the input.
pub fn compose_stages(
    rho_in: &DensityOperator,
    seq: &PulseSequence,
) -> Result<Vec<DensityOperator>> {
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(*rho_in);
    for fp in &seq.steps {
        let next = apply_step(out.last().expect("non-empty"), fp, seq.mode)?;
        out.push(next);
    }
    Ok(out)
}

/// `(1 − Tr{ρ̄ ρ_f})^{1/2}`.
pub fn mismatch_j(rho_bar: &DensityOperator, rho_f: &DensityOperator) -> Result<f64> {
    let overlap = trace_product(rho_bar.matrix(), rho_f.matrix()).re;
    if overlap > 1.0 + 1e-9 {
        return Err(Error::NegativeRadicand(overlap));
    }
    let radicand = 1.0 - overlap;
    if radicand < 0.0 {
        // within 1e-9 of zero from below: rounding noise
        return Ok(0.0);
    }
    Ok(radicand.sqrt())
}

/// Hilbert–Schmidt distance `√Tr{(ρ̄ − ρ_f)²}`.
pub fn hs_distance(rho_bar: &DensityOperator, rho_f: &DensityOperator) -> f64 {
    (rho_bar.matrix() - rho_f.matrix()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{bloch_coords, TargetState};
    use crate::linalg::{embed, ket_bra, projector_onto, Ground, ONE, ZERO};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn fp() -> FieldParams {
        FieldParams::new(1.1, 0.35, 2.2, 0.9)
    }

    fn pure(v: &crate::linalg::Vec4) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(projector_onto(v))
    }

    #[test]
    fn ta_fixes_dark_states_and_spreads_bright() {
        let b = dark_basis(&fp());
        let n1 = pure(&b.n1_ket());
        assert!((apply_ta(&n1, &b).unwrap().matrix() - n1.matrix()).norm() < 1e-15);
        let bright = pure(&b.phi_perp_ket());
        let out = apply_ta(&bright, &b).unwrap();
        assert!((out.matrix() - b.projector * c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ta_of_ground_identity() {
        let b = dark_basis(&fp());
        let mut m = Mat4::zeros();
        for q in 0..3 {
            m[(q, q)] = c(1.0 / 3.0, 0.0);
        }
        let out = apply_ta(&DensityOperator::from_matrix_unchecked(m), &b).unwrap();
        assert!((out.matrix() - b.projector * c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_is_checked() {
        let b = dark_basis(&fp());
        let half = DensityOperator::from_matrix_unchecked(b.projector * c(0.25, 0.0));
        assert!(matches!(apply_ta(&half, &b), Err(Error::TraceMismatch(_))));
        assert!(matches!(
            apply_tb(&half, &fp()),
            Err(Error::TraceMismatch(_))
        ));
    }

    #[test]
    fn rho_tilde_special_cases() {
        let t = rho_tilde(&FieldParams::new(0.3, PI / 2.0, 0.4, 1.0));
        let gp = embed(&Ground::new(ZERO, ZERO, ONE));
        assert!((t.matrix() - ket_bra(&gp, &gp)).norm() < 1e-15);
        let t = rho_tilde(&FieldParams::new(0.3, 0.0, 0.4, 1.0));
        let gm = embed(&Ground::new(ONE, ZERO, ZERO));
        assert!((t.matrix() - ket_bra(&gm, &gm)).norm() < 1e-15);
        for phi in [0.1, 0.7, 2.0, 4.4] {
            let t = rho_tilde(&FieldParams::new(0.3, phi, 0.4, 1.0));
            assert!((t.trace() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_tilde_is_n2_projector() {
        let f = fp();
        let n2 = dark_basis(&f).n2_ket();
        assert!((rho_tilde(&f).matrix() - ket_bra(&n2, &n2)).norm() < 1e-15);
    }

    #[test]
    fn tb_fixed_points() {
        let f = fp();
        let tilde = rho_tilde(&f);
        assert!((apply_tb(&tilde, &f).unwrap().matrix() - tilde.matrix()).norm() < 1e-15);
        let b = dark_basis(&f);
        let v = (b.n1_ket() * c(0.6, 0.0) + b.n2_ket() * c(0.0, 0.8)) * ONE;
        let dark = pure(&v);
        assert!((apply_tb(&dark, &f).unwrap().matrix() - dark.matrix()).norm() < 1e-15);
    }

    #[test]
    fn single_step_in_span_is_identity() {
        let f = fp();
        let b = dark_basis(&f);
        let rho = pure(&((b.n1_ket() - b.n2_ket()) * c(FRAC_1_SQRT_2, 0.0)));
        let seq = PulseSequence::new(vec![f], Mode::Alpha).unwrap();
        assert!((compose_sequence(&rho, &seq).unwrap().matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn empty_sequence_returns_input() {
        let rho = DensityOperator::excited();
        let seq = PulseSequence::new(vec![], Mode::Alpha).unwrap();
        assert_eq!(compose_sequence(&rho, &seq).unwrap(), rho);
        assert_eq!(compose_stages(&rho, &seq).unwrap().len(), 1);
    }

    #[test]
    fn mismatch_values() {
        let b = dark_basis(&fp());
        let n1 = pure(&b.n1_ket());
        assert_eq!(mismatch_j(&n1, &n1).unwrap(), 0.0);
        let half = DensityOperator::from_matrix_unchecked(b.projector * c(0.5, 0.0));
        assert!((mismatch_j(&half, &n1).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);

        let t = TargetState::new((0.3, 0.7), b.n1, b.n2).unwrap().rho();
        let floor = (1.0 - t.purity()).sqrt();
        assert!(floor > 0.0);
        assert!((mismatch_j(&t, &t).unwrap() - floor).abs() < 1e-15);

        let big = DensityOperator::from_matrix_unchecked(n1.into_matrix() * c(1.5, 0.0));
        assert!(matches!(
            mismatch_j(&big, &n1),
            Err(Error::NegativeRadicand(_))
        ));
    }

    #[test]
    fn hs_distance_values() {
        let b = dark_basis(&fp());
        let n1 = pure(&b.n1_ket());
        let n2 = pure(&b.n2_ket());
        assert_eq!(hs_distance(&n1, &n1), 0.0);
        assert!((hs_distance(&n1, &n2) - 2f64.sqrt()).abs() < 1e-15);
        let v = (b.n1_ket() * c(0.6, 0.0) + b.phi_perp_ket() * c(0.0, 0.8)) * ONE;
        let other = pure(&v);
        let j = mismatch_j(&other, &n1).unwrap();
        assert!((hs_distance(&other, &n1) - 2f64.sqrt() * j).abs() < 1e-14);
    }

    #[test]
    fn output_lives_in_dark_plane() {
        let f = fp();
        let b = dark_basis(&f);
        let rho =
            DensityOperator::pure_ground(&Ground::new(c(0.2, 0.1), c(-0.5, 0.3), c(0.1, -0.7)))
                .unwrap();
        let out = apply_ta(&rho, &b).unwrap();
        let p = b.projector;
        assert!((p * out.matrix() * p - out.matrix()).norm() < 1e-15);
        let pt = bloch_coords(&out, &b);
        assert!((pt.in_span_weight - 1.0).abs() < 1e-14);
    }
}
