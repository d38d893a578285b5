//! Search for one fixed pulse sequence that sends every initial state to the
//! prescribed target.
//!
//! The free parameters are the polarization angles `(θ, φ, μ₋, μ₊)` of each
//! pulse; amplitude, detuning and global phase do not enter the relaxation
//! maps. The figure of merit is the root-mean-square Hilbert–Schmidt
//! distance over a grid of pure initial states. Descent minimizes its square,
//! evaluated through the moment identity in [`superop`].

pub mod grid;
pub mod ncg;
pub mod superop;

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{field_for_span, DensityOperator, FieldParams, TargetState};
use crate::linalg::Ground;
use crate::liouvillian::Mode;
use crate::relax::{compose_sequence, hs_distance, mismatch_j, PulseSequence};

pub use grid::{initial_state_grid, random_pure_states, StateGrid};
use superop::{ground_vec, sequence_map, StateMoments};

/// Optimizer controls. Defaults: 8 restarts, 2000 iterations, RMS tolerance 1e-6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Keep the last pulse fixed at the target plane instead of only starting there.
    #[serde(default)]
    pub pin_last: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            seed: 0,
            restarts: 8,
            max_iter: 2000,
            tol: 1e-6,
            pin_last: false,
        }
    }
}

/// Central-difference step per angle.
pub const FD_STEP: f64 = 1e-6;

/// Hilbert–Schmidt distance and mismatch functional for one initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDistance {
    pub hs: f64,
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub rms_hs: f64,
    pub max_hs: f64,
    pub rms_mismatch: f64,
    pub max_mismatch: f64,
}

impl DistanceStats {
    pub fn from_distances(d: &[StateDistance]) -> Self {
        let n = d.len().max(1) as f64;
        let rms =
            |f: fn(&StateDistance) -> f64| (d.iter().map(|s| f(s).powi(2)).sum::<f64>() / n).sqrt();
        let max = |f: fn(&StateDistance) -> f64| d.iter().map(f).fold(0.0, f64::max);
        DistanceStats {
            rms_hs: rms(|s| s.hs),
            max_hs: max(|s| s.hs),
            rms_mismatch: rms(|s| s.mismatch),
            max_mismatch: max(|s| s.mismatch),
        }
    }
}

/// Build a sequence from a flat angle vector `(θ, φ, μ₋, μ₊)` per pulse.
pub fn sequence_from_params(params: &[f64], mode: Mode) -> Result<PulseSequence> {
    if !params.len().is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "parameter vector length {} is not a multiple of 4",
            params.len()
        )));
    }
    let steps = params
        .chunks_exact(4)
        .map(|a| FieldParams::new(a[0], a[1], a[2], a[3]))
        .collect();
    PulseSequence::new(steps, mode)
}

/// Distances from the sequence output to the target for every state, in input order.
pub fn state_distances(
    seq: &PulseSequence,
    states: &[Ground],
    target: &TargetState,
) -> Result<Vec<StateDistance>> {
    let rho_f = target.rho();
    states
        .par_iter()
        .map(|psi| {
            let out = compose_sequence(&DensityOperator::pure_ground(psi)?, seq)?;
            Ok(StateDistance {
                hs: hs_distance(&out, &rho_f),
                mismatch: mismatch_j(&out, &rho_f)?,
            })
        })
        .collect()
}

fn rms_of(d: &[StateDistance]) -> f64 {
    (d.iter().map(|s| s.hs * s.hs).sum::<f64>() / d.len().max(1) as f64).sqrt()
}

/// Root-mean-square HS distance over the grid, composing each state explicitly.
pub fn objective(
    params: &[f64],
    grid: &StateGrid,
    target: &TargetState,
    mode: Mode,
) -> Result<f64> {
    let seq = sequence_from_params(params, mode)?;
    Ok(rms_of(&state_distances(&seq, &grid.states, target)?))
}

/// RMS and maximum HS distance over a state set.
pub fn objective_with_max(
    params: &[f64],
    grid: &StateGrid,
    target: &TargetState,
    mode: Mode,
) -> Result<(f64, f64)> {
    let seq = sequence_from_params(params, mode)?;
    let d = state_distances(&seq, &grid.states, target)?;
    let stats = DistanceStats::from_distances(&d);
    Ok((stats.rms_hs, stats.max_hs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub sequence: PulseSequence,
    /// RMS HS distance over the training states.
    pub objective_value: f64,
    pub per_state_distances: Vec<StateDistance>,
    /// Descent iterations of the winning restart.
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    /// RMS objective after each accepted step of the winning restart.
    pub history: Vec<f64>,
    /// Final RMS objective of each restart, in restart order.
    pub restart_objectives: Vec<f64>,
    /// Running minimum of `restart_objectives`.
    pub best_so_far: Vec<f64>,
}

impl OptimizationResult {
    pub fn stats(&self) -> DistanceStats {
        DistanceStats::from_distances(&self.per_state_distances)
    }
}

struct RestartOutcome {
    params: Vec<f64>,
    rms: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn random_angles(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [
        rng.random::<f64>() * PI,
        rng.random::<f64>() * TAU,
        rng.random::<f64>() * TAU,
        rng.random::<f64>() * TAU,
    ]
}

/// Multi-start nonlinear conjugate-gradient search for an `n`-pulse sequence.
///
/// Each restart draws the angles of the first `n − 1` pulses uniformly from
/// its own seeded stream; the last pulse starts at the polarization whose
/// dark plane is the target plane. Restarts run in parallel, and the result
/// does not depend on the thread count.
pub fn optimize_sequence(
    n: usize,
    target: &TargetState,
    grid: &StateGrid,
    settings: &OptimizerSettings,
    mode: Mode,
) -> Result<OptimizationResult> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "a sequence needs at least one pulse".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty training grid".into()));
    }
    let target = TargetState::new(target.weights, target.psi1, target.psi2)?;
    let last = field_for_span(&target.psi1, &target.psi2)?.field.angles();
    let moments = StateMoments::new(&grid.states);
    let f_vec = ground_vec(target.rho().matrix());
    let free = if settings.pin_last {
        4 * (n - 1)
    } else {
        4 * n
    };

    let assemble = |x: &[f64]| -> Vec<f64> {
        let mut p = x.to_vec();
        if settings.pin_last {
            p.extend_from_slice(&last);
        }
        p
    };
    let mean_sq = |x: &[f64]| -> f64 {
        let p = assemble(x);
        let steps = p
            .chunks_exact(4)
            .map(|a| FieldParams::new(a[0], a[1], a[2], a[3]))
            .collect();
        let map = sequence_map(&PulseSequence { steps, mode });
        moments.mean_squared_distance(&map, &f_vec)
    };
    let cg = ncg::CgSettings {
        max_iter: settings.max_iter,
        f_target: settings.tol * settings.tol,
        fd_step: FD_STEP,
    };

    let outcomes: Vec<RestartOutcome> = (0..settings.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(settings.seed, k));
            let mut x0: Vec<f64> = (0..n - 1).flat_map(|_| random_angles(&mut rng)).collect();
            if !settings.pin_last {
                x0.extend_from_slice(&last);
            }
            debug_assert_eq!(x0.len(), free);
            let out = ncg::minimize(mean_sq, &x0, cg);
            RestartOutcome {
                params: assemble(&out.x),
                rms: out.f.max(0.0).sqrt(),
                iterations: out.iterations,
                history: out.history.iter().map(|v| v.max(0.0).sqrt()).collect(),
            }
        })
        .collect();

    let restart_objectives: Vec<f64> = outcomes.iter().map(|o| o.rms).collect();
    let best_so_far = restart_objectives
        .iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect();
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.rms.total_cmp(&b.rms).then(i.cmp(j)))
        .map(|(_, o)| o)
        .expect("at least one restart");

    let sequence = sequence_from_params(&best.params, mode)?.canonical();
    let per_state_distances = state_distances(&sequence, &grid.states, &target)?;
    let objective_value = rms_of(&per_state_distances);
    Ok(OptimizationResult {
        sequence,
        objective_value,
        per_state_distances,
        iterations: best.iterations,
        seed: settings.seed,
        converged: objective_value <= settings.tol,
        history: best.history,
        restart_objectives,
        best_so_far,
    })
}

/// One row of a purity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p1: f64,
    pub n: usize,
    pub rms_objective: f64,
    pub max_distance: f64,
    pub iterations: usize,
}

/// Optimize every `(p1, N)` pair with the same budget; rows ordered by weight, then `N`.
pub fn purity_sweep(
    psi1: &Ground,
    psi2: &Ground,
    weights: &[f64],
    n_list: &[usize],
    grid: &StateGrid,
    settings: &OptimizerSettings,
    mode: Mode,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(weights.len() * n_list.len());
    for &p1 in weights {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidTarget(format!("weight {p1} outside [0, 1]")));
        }
        let target = TargetState::new((p1, 1.0 - p1), *psi1, *psi2)?;
        for &n in n_list {
            let res = optimize_sequence(n, &target, grid, settings, mode)?;
            rows.push(SweepRow {
                p1,
                n,
                rms_objective: res.objective_value,
                max_distance: res.stats().max_hs,
                iterations: res.iterations,
            });
        }
    }
    Ok(rows)
}
