use std::f64::consts::{FRAC_PI_2, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, Ground};

/// Discretized set of pure initial states of the ground manifold.
///
/// `|ψ⟩ = [cosχ₁, sinχ₁ cosχ₂ e^{iβ₂}, sinχ₁ sinχ₂ e^{iβ₃}]` with the amplitude
/// angles on `[0, π/2]` (endpoints included) and the phases on `[0, 2π)`
/// (endpoint excluded). The ordering is `χ₁` outermost, `β₃` innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    pub states: Vec<Ground>,
    pub resolution: usize,
}

impl StateGrid {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Wrap an arbitrary list of unit vectors (resolution recorded as 0).
    pub fn from_states(states: Vec<Ground>) -> Self {
        StateGrid {
            states,
            resolution: 0,
        }
    }
}

pub fn grid_state(chi1: f64, chi2: f64, beta2: f64, beta3: f64) -> Ground {
    let (s1, c1) = chi1.sin_cos();
    let (s2, c2) = chi2.sin_cos();
    Ground::new(c(c1, 0.0), cis(beta2) * (s1 * c2), cis(beta3) * (s1 * s2))
}

pub fn initial_state_grid(resolution: usize) -> Result<StateGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 2".into(),
        ));
    }
    let amp = |k: usize| FRAC_PI_2 * k as f64 / (resolution - 1) as f64;
    let phase = |k: usize| TAU * k as f64 / resolution as f64;
    let mut states = Vec::with_capacity(resolution.pow(4));
    for a in 0..resolution {
        for b in 0..resolution {
            for p in 0..resolution {
                for q in 0..resolution {
                    states.push(grid_state(amp(a), amp(b), phase(p), phase(q)));
                }
            }
        }
    }
    Ok(StateGrid { states, resolution })
}

/// Unitarily invariant random pure states (normalized complex Gaussians).
pub fn random_pure_states(count: usize, seed: u64) -> Vec<Ground> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
            let v = Ground::new(c(draw(), draw()), c(draw(), draw()), c(draw(), draw()));
            v.normalize()
        })
        .collect()
}
