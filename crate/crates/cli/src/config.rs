//! Experiment configuration: a strict JSON schema with complex amplitudes
//! written as `[re, im]` pairs.

use std::path::Path;

use darkpump::linalg::{c, Ground};
use darkpump::{Envelope, FieldParams, Mode, OptimizerSettings, Rates, TargetState, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complex number as `[re, im]`.
pub type Amplitude = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub weights: [f64; 2],
    pub psi1: [Amplitude; 3],
    pub psi2: [Amplitude; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub gamma_in: f64,
    #[serde(default)]
    pub gamma_ext: f64,
    #[serde(default)]
    pub r_pump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Residual of the slowest mode used to size each pulse.
    pub residual: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-12,
            residual: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub weights: Vec<f64>,
    pub n_list: Vec<usize>,
}

/// Polarization angles of a single pulse, for `spectrum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesConfig {
    pub theta: f64,
    pub phi: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    pub steps: usize,
    pub mode: Mode,
    pub rates: RatesConfig,
    #[serde(default = "one")]
    pub omega_peak: f64,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "default_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Size of the held-out random test set.
    #[serde(default = "default_test_states")]
    pub test_states: usize,
    /// Initial ground states for `simulate`; `[|g₋⟩]` when absent.
    #[serde(default)]
    pub initial_states: Option<Vec<[Amplitude; 3]>>,
    /// Number of random initial states for `verify`.
    #[serde(default = "default_verify_states")]
    pub verify_states: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Pulse analysed by `spectrum`; defaults to the pulse whose dark plane is the target span.
    #[serde(default)]
    pub field: Option<AnglesConfig>,
}

fn one() -> f64 {
    1.0
}

fn default_resolution() -> usize {
    5
}

fn default_test_states() -> usize {
    1000
}

fn default_verify_states() -> usize {
    50
}

fn ground(a: &[Amplitude; 3]) -> Ground {
    Ground::new(
        c(a[0][0], a[0][1]),
        c(a[1][0], a[1][1]),
        c(a[2][0], a[2][1]),
    )
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {why}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parse and validate; unknown keys and invalid values are config errors.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let [p1, p2] = self.target.weights;
        if !(p1.is_finite() && p2.is_finite() && p1 >= 0.0 && p2 >= 0.0) {
            return Err(invalid(
                "target.weights",
                "weights must be finite and nonnegative",
            ));
        }
        if (p1 + p2 - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "target.weights",
                format!("weights sum to {} instead of 1", p1 + p2),
            ));
        }
        for (name, v) in [
            ("target.psi1", &self.target.psi1),
            ("target.psi2", &self.target.psi2),
        ] {
            let norm = ground(v).norm();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                return Err(invalid(
                    name,
                    format!("must be a unit vector, norm is {norm}"),
                ));
            }
        }
        self.target_state().map_err(|e| invalid("target", e))?;
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        self.rates().validate().map_err(|e| invalid("rates", e))?;
        positive("omega_peak", self.omega_peak)?;
        if self.grid_resolution < 2 {
            return Err(invalid("grid_resolution", "must be at least 2"));
        }
        if self.optimizer.restarts == 0 {
            return Err(invalid("optimizer.restarts", "must be at least 1"));
        }
        if !(self.optimizer.tol.is_finite() && self.optimizer.tol >= 0.0) {
            return Err(invalid("optimizer.tol", "must be finite and nonnegative"));
        }
        positive("integrator.rtol", self.integrator.rtol)?;
        positive("integrator.atol", self.integrator.atol)?;
        let res = self.integrator.residual;
        if !(res > 0.0 && res < 1.0) {
            return Err(invalid("integrator.residual", "must lie in (0, 1)"));
        }
        if self.test_states == 0 {
            return Err(invalid("test_states", "must be at least 1"));
        }
        if let Some(states) = &self.initial_states {
            for (k, s) in states.iter().enumerate() {
                let norm = ground(s).norm();
                if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                    return Err(invalid(
                        &format!("initial_states[{k}]"),
                        format!("norm is {norm}"),
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if let Some(w) = sweep.weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
                return Err(invalid("sweep.weights", format!("{w} outside [0, 1]")));
            }
            if sweep.n_list.contains(&0) {
                return Err(invalid("sweep.n_list", "pulse counts must be at least 1"));
            }
        }
        if let Some(f) = &self.field {
            FieldParams::new(f.theta, f.phi, f.mu_minus, f.mu_plus)
                .validate()
                .map_err(|e| invalid("field", e))?;
        }
        Ok(())
    }

    pub fn target_state(&self) -> darkpump::Result<TargetState> {
        let [p1, p2] = self.target.weights;
        TargetState::new(
            (p1, p2),
            ground(&self.target.psi1),
            ground(&self.target.psi2),
        )
    }

    pub fn rates(&self) -> Rates {
        Rates {
            gamma_in: self.rates.gamma_in,
            gamma_ext: self.rates.gamma_ext,
            r_pump: self.rates.r_pump,
            mode: self.mode,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.integrator.rtol,
            atol: self.integrator.atol,
        }
    }

    /// Apply the configured amplitude and envelope to a pulse.
    pub fn dress(&self, fp: &FieldParams) -> FieldParams {
        fp.with_omega(self.omega_peak).with_envelope(self.envelope)
    }

    pub fn initial_grounds(&self) -> Vec<Ground> {
        match &self.initial_states {
            Some(states) => states.iter().map(ground).collect(),
            None => vec![Ground::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))],
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.optimizer.seed = s;
        }
        self
    }
}

/// The reproduction config shipped with the crate.
pub const PAPER_TARGET: &str = include_str!("../data/paper_target.json");

pub fn paper_config() -> ExperimentConfig {
    ExperimentConfig::from_json(PAPER_TARGET).expect("bundled config is valid")
}
