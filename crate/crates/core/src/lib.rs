//! Engineering pure and mixed ground states of a degenerate four-level Λ
//! system by sequences of relaxation pulses.
//!
//! Each pulse drives the atom until it has relaxed into the pulse's dark
//! plane; the asymptotic effect of a pulse is an affine map of the density
//! operator that depends only on the pulse polarization. The crate provides
//! those maps, the master-equation generator they come from, a time
//! integrator to check them against, and an optimizer that finds a pulse
//! sequence sending every initial state to a prescribed target.

pub mod dynamics;
pub mod error;
pub mod lambda;
pub mod linalg;
pub mod liouvillian;
pub mod pulsecraft;
pub mod relax;
pub mod scenario;

pub use dynamics::{
    analytic_map, integrate_master, recommended_duration, verify_map, verify_map_with, MapCheck,
    Tolerances, Trajectory,
};
pub use error::{Error, Result};
pub use lambda::{
    bloch_coords, build_hamiltonian, dark_basis, field_for_span, orthogonal_state, BlochPoint,
    DarkBasis, DensityOperator, Envelope, FieldParams, SpanField, TargetState,
};
pub use liouvillian::{
    build_liouvillian, closed_form_zero_modes, slowest_rate, spectrum, steady_affine,
    zero_diagnostics, zero_subspace, Liouvillian, Mode, Rates, ZeroDiagnostics, ZeroSubspace,
};
pub use pulsecraft::{
    initial_state_grid, objective, optimize_sequence, purity_sweep, random_pure_states,
    DistanceStats, OptimizationResult, OptimizerSettings, StateDistance, StateGrid, SweepRow,
};
pub use relax::{
    apply_ta, apply_tb, compose_sequence, compose_stages, hs_distance, mismatch_j, rho_tilde,
    PulseSequence,
};
