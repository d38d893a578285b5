//! The reference state-engineering experiment: a rank-two mixture of two
//! non-orthogonal ground states, prepared by four pulses.

use std::f64::consts::PI;

use crate::lambda::TargetState;
use crate::linalg::{c, cis, Ground};

/// `|ψ1⟩ = [2/7 e^{iπ/3}, 3/7 e^{iπ/5}, 6/7]`.
pub fn reference_psi1() -> Ground {
    Ground::new(
        cis(PI / 3.0) * (2.0 / 7.0),
        cis(PI / 5.0) * (3.0 / 7.0),
        c(6.0 / 7.0, 0.0),
    )
}

/// `|ψ2⟩ = [3/5, 4/5 e^{iπ/7}, 0]`.
pub fn reference_psi2() -> Ground {
    Ground::new(c(3.0 / 5.0, 0.0), cis(PI / 7.0) * (4.0 / 5.0), c(0.0, 0.0))
}

/// `ρ_f = ⅓ |ψ1⟩⟨ψ1| + ⅔ |ψ2⟩⟨ψ2|`.
pub fn reference_target() -> TargetState {
    TargetState::new((1.0 / 3.0, 2.0 / 3.0), reference_psi1(), reference_psi2())
        .expect("reference target is valid")
}

/// Number of pulses in the reference experiment.
pub const REFERENCE_STEPS: usize = 4;
