use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use darkpump::linalg::{trace_product, Ground, Mat4, EXCITED};
use darkpump::liouvillian::{slowest_rate_of, ZERO_EIG_REL_TOL};
use darkpump::pulsecraft::state_distances;
use darkpump::{
    bloch_coords, build_liouvillian, compose_sequence, compose_stages, dark_basis, field_for_span,
    hs_distance, initial_state_grid, integrate_master, mismatch_j, optimize_sequence, purity_sweep,
    random_pure_states, recommended_duration, spectrum, verify_map_with, zero_diagnostics,
    DensityOperator, DistanceStats, FieldParams, Mode, OptimizationResult, PulseSequence, Rates,
    StateGrid, ZeroDiagnostics,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Amplitude, ExperimentConfig};
use crate::error::CliError;
use crate::output::{num, write_json, Csv};

/// Offsets that decorrelate the auxiliary random streams from the optimizer seed.
const TEST_SET_SALT: u64 = 0x7E57_5E7D_0000_0001;
const VERIFY_SALT: u64 = 0x5E1F_CE57_0000_0002;

/// Residuals for which `spectrum` reports pulse durations.
pub const REPORT_RESIDUALS: [f64; 3] = [1e-6, 1e-10, 1e-12];

/// Threshold for `verify` and `simulate` map-vs-ODE agreement.
pub const CERTIFY_TOL: f64 = 1e-6;

pub fn test_seed(seed: u64) -> u64 {
    seed ^ TEST_SET_SALT
}

/// Wall-clock data, kept apart from the deterministic artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub version: String,
}

pub fn write_metadata(dir: &Path, command: &str, seconds: f64) -> anyhow::Result<PathBuf> {
    let path = dir.join("metadata.json");
    let meta = Metadata {
        command: command.to_string(),
        wall_time_seconds: seconds,
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&path, &meta)?;
    Ok(path)
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepAngles {
    pub theta: f64,
    pub phi: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeReport {
    pub seed: u64,
    pub mode: Mode,
    pub steps: usize,
    pub grid_resolution: usize,
    pub angles: Vec<StepAngles>,
    pub sequence: PulseSequence,
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// RMS distance after every accepted step of the best restart.
    pub objective_history: Vec<f64>,
    pub restart_objectives: Vec<f64>,
    pub best_so_far: Vec<f64>,
    pub training: DistanceStats,
    pub test_seed: u64,
    pub test_states: usize,
    pub test: DistanceStats,
}

impl OptimizeReport {
    fn from_result(cfg: &ExperimentConfig, res: OptimizationResult, test: DistanceStats) -> Self {
        let angles = res
            .sequence
            .steps
            .iter()
            .map(|s| StepAngles {
                theta: s.theta,
                phi: s.phi,
                mu_minus: s.mu_minus,
                mu_plus: s.mu_plus,
            })
            .collect();
        OptimizeReport {
            seed: res.seed,
            mode: cfg.mode,
            steps: cfg.steps,
            grid_resolution: cfg.grid_resolution,
            angles,
            training: res.stats(),
            sequence: res.sequence,
            objective_value: res.objective_value,
            converged: res.converged,
            iterations: res.iterations,
            objective_history: res.history,
            restart_objectives: res.restart_objectives,
            best_so_far: res.best_so_far,
            test_seed: test_seed(cfg.optimizer.seed),
            test_states: cfg.test_states,
            test,
        }
    }
}

pub fn optimize(cfg: &ExperimentConfig) -> Result<OptimizeReport, CliError> {
    let target = cfg.target_state()?;
    let grid = initial_state_grid(cfg.grid_resolution)?;
    let res = optimize_sequence(cfg.steps, &target, &grid, &cfg.optimizer, cfg.mode)?;
    let test_set = random_pure_states(cfg.test_states, test_seed(cfg.optimizer.seed));
    let test = DistanceStats::from_distances(&state_distances(&res.sequence, &test_set, &target)?);
    Ok(OptimizeReport::from_result(cfg, res, test))
}

pub fn cmd_optimize(
    cfg: &ExperimentConfig,
    out: &Path,
    strict: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let report = optimize(cfg)?;
    let path = out.join("result.json");
    write_json(&path, &report)?;
    if strict && !report.converged {
        return Err(CliError::NoConvergence(format!(
            "best RMS distance {:e} exceeds tol {:e}",
            report.objective_value, cfg.optimizer.tol
        )));
    }
    Ok(vec![path])
}

/// Read a pulse sequence from an `optimize` result or from a bare sequence document.
pub fn load_sequence(path: &Path) -> Result<PulseSequence, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let seq_value = match value.get("sequence") {
        Some(v) => v.clone(),
        None => value,
    };
    let seq: PulseSequence = serde_json::from_value(seq_value)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    seq.validate()?;
    Ok(seq)
}

// ---------------------------------------------------------------- simulate

fn matrix_entries(m: &Mat4) -> Vec<Amplitude> {
    (0..16)
        .map(|k| m[(k / 4, k % 4)])
        .map(|z| [z.re, z.im])
        .collect()
}

fn amplitudes(psi: &Ground) -> [Amplitude; 3] {
    [
        [psi[0].re, psi[0].im],
        [psi[1].re, psi[1].im],
        [psi[2].re, psi[2].im],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedState {
    pub index: usize,
    pub initial: [Amplitude; 3],
    /// Row-major `[re, im]` entries of the final density operators.
    pub ode_final: Vec<Amplitude>,
    pub map_final: Vec<Amplitude>,
    pub ode_vs_map: f64,
    pub map_vs_target: f64,
    pub ode_vs_target: f64,
    pub mismatch_ode_target: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub mode: Mode,
    pub rates: Rates,
    pub residual: f64,
    pub pulse_durations: Vec<f64>,
    pub slowest_rates: Vec<f64>,
    pub states: Vec<SimulatedState>,
    pub max_ode_vs_map: f64,
}

const TRAJ_HEADER_TAIL: [&str; 6] = [
    "pop_g_minus",
    "pop_g_pi",
    "pop_g_plus",
    "pop_e",
    "trace",
    "dark_weight",
];

fn trajectory_header() -> Vec<String> {
    let mut h = vec!["time".to_string()];
    for i in 0..4 {
        for j in 0..4 {
            h.push(format!("re_{i}{j}"));
            h.push(format!("im_{i}{j}"));
        }
    }
    h.extend(TRAJ_HEADER_TAIL.iter().map(|s| s.to_string()));
    h
}

pub fn simulate(
    cfg: &ExperimentConfig,
    seq: &PulseSequence,
) -> Result<(SimulateSummary, Vec<Vec<Csv>>), CliError> {
    let rates = cfg.rates();
    let target = cfg.target_state()?.rho();
    let tol = cfg.tolerances();
    let residual = cfg.integrator.residual;
    let pulses: Vec<FieldParams> = seq.steps.iter().map(|s| cfg.dress(s)).collect();
    let mut durations = Vec::with_capacity(pulses.len());
    let mut slowest = Vec::with_capacity(pulses.len());
    for fp in &pulses {
        let l = build_liouvillian(fp, &rates, 1.0);
        let eig = spectrum(&l)?;
        slowest.push(slowest_rate_of(&eig)?);
        durations.push(recommended_duration(&l, residual)?);
    }
    let map_seq = PulseSequence {
        steps: pulses.clone(),
        mode: cfg.mode,
    };
    let header = trajectory_header();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    let per_state: Vec<Result<(SimulatedState, Vec<Csv>), CliError>> = cfg
        .initial_grounds()
        .par_iter()
        .enumerate()
        .map(|(index, psi)| {
            let rho0 = DensityOperator::pure_ground(&psi.normalize())?;
            let mut rho = rho0;
            let mut t0 = 0.0;
            let mut csvs = Vec::with_capacity(pulses.len());
            let (mut accepted, mut rejected) = (0, 0);
            for (fp, &dur) in pulses.iter().zip(&durations) {
                let traj = integrate_master(&rho, fp, &rates, dur, tol)?;
                let projector = dark_basis(fp).projector;
                let mut csv = Csv::new(&header_refs);
                for (t, s) in traj.times.iter().zip(&traj.states) {
                    let m = s.matrix();
                    let mut cells = vec![num(t0 + t)];
                    for z in matrix_entries(m) {
                        cells.push(num(z[0]));
                        cells.push(num(z[1]));
                    }
                    for k in 0..3 {
                        cells.push(num(m[(k, k)].re));
                    }
                    cells.push(num(m[(EXCITED, EXCITED)].re));
                    cells.push(num(s.trace()));
                    cells.push(num(trace_product(&projector, m).re));
                    csv.row(&cells);
                }
                csvs.push(csv);
                accepted += traj.accepted_steps;
                rejected += traj.rejected_steps;
                t0 += dur;
                rho = traj.final_state;
            }
            let mapped = compose_sequence(&rho0, &map_seq)?;
            let state = SimulatedState {
                index,
                initial: amplitudes(psi),
                ode_final: matrix_entries(rho.matrix()),
                map_final: matrix_entries(mapped.matrix()),
                ode_vs_map: hs_distance(&rho, &mapped),
                map_vs_target: hs_distance(&mapped, &target),
                ode_vs_target: hs_distance(&rho, &target),
                mismatch_ode_target: mismatch_j(&rho, &target)?,
                accepted_steps: accepted,
                rejected_steps: rejected,
            };
            Ok((state, csvs))
        })
        .collect();

    let mut states = Vec::new();
    let mut files = Vec::new();
    for r in per_state {
        let (s, c) = r?;
        states.push(s);
        files.push(c);
    }
    let max_ode_vs_map = states.iter().map(|s| s.ode_vs_map).fold(0.0, f64::max);
    let summary = SimulateSummary {
        mode: cfg.mode,
        rates,
        residual,
        pulse_durations: durations,
        slowest_rates: slowest,
        states,
        max_ode_vs_map,
    };
    Ok((summary, files))
}

pub fn cmd_simulate(
    cfg: &ExperimentConfig,
    seq: &PulseSequence,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let (summary, files) = simulate(cfg, seq)?;
    let mut written = Vec::new();
    for (s, csvs) in files.iter().enumerate() {
        for (p, csv) in csvs.iter().enumerate() {
            let path = out.join(format!("trajectory_state{s}_pulse{}.csv", p + 1));
            csv.write(&path)?;
            written.push(path);
        }
    }
    let path = out.join("simulation.json");
    write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub index: usize,
    pub angles: StepAngles,
    pub initial: [Amplitude; 3],
    pub duration: f64,
    pub slowest_rate: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub rates: Rates,
    pub omega_peak: f64,
    pub residual: f64,
    pub threshold: f64,
    pub entries: Vec<VerifyEntry>,
    pub max_distance: f64,
    pub passed: bool,
}

/// Map-versus-dynamics certification on random pulses and random pure initial states.
pub fn verify(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let seed = cfg.optimizer.seed ^ VERIFY_SALT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<FieldParams> = (0..cfg.verify_states)
        .map(|_| {
            let a = [
                rng.random::<f64>() * PI,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            ];
            cfg.dress(&FieldParams::new(a[0], a[1], a[2], a[3]))
        })
        .collect();
    let states = random_pure_states(cfg.verify_states, seed.wrapping_add(1));
    let rates = cfg.rates();
    let entries: Vec<Result<VerifyEntry, CliError>> = fields
        .par_iter()
        .zip(states.par_iter())
        .enumerate()
        .map(|(index, (fp, psi))| {
            let rho = DensityOperator::pure_ground(psi)?;
            let check =
                verify_map_with(&rho, fp, &rates, cfg.integrator.residual, cfg.tolerances())?;
            Ok(VerifyEntry {
                index,
                angles: StepAngles {
                    theta: fp.theta,
                    phi: fp.phi,
                    mu_minus: fp.mu_minus,
                    mu_plus: fp.mu_plus,
                },
                initial: amplitudes(psi),
                duration: check.duration,
                slowest_rate: check.slowest_rate,
                distance: check.distance,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_distance = entries.iter().map(|e| e.distance).fold(0.0, f64::max);
    Ok(VerifyReport {
        mode: cfg.mode,
        rates,
        omega_peak: cfg.omega_peak,
        residual: cfg.integrator.residual,
        threshold: CERTIFY_TOL,
        entries,
        max_distance,
        passed: max_distance < CERTIFY_TOL,
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let report = verify(cfg)?;
    let path = out.join("verify.json");
    write_json(&path, &report)?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- bloch-export

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageGeometry {
    pub stage: usize,
    pub points: usize,
    pub centroid: [f64; 3],
    /// Largest distance of a point from the centroid.
    pub bounding_radius: f64,
    pub min_in_span_weight: f64,
    pub max_in_span_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochReport {
    pub grid_resolution: usize,
    pub stages: Vec<StageGeometry>,
}

/// Bloch coordinates of the whole grid after each stage: stage `l < N` in
/// the dark basis of pulse `l`, stage `N` in the orthonormalized target span.
pub fn bloch_export(
    cfg: &ExperimentConfig,
    seq: &PulseSequence,
    grid: &StateGrid,
) -> Result<(BlochReport, Csv), CliError> {
    let target = cfg.target_state()?;
    let n = seq.len();
    let bases: Vec<_> = (0..n)
        .map(|l| {
            if l + 1 == n {
                target.span_basis()
            } else {
                dark_basis(&seq.steps[l])
            }
        })
        .collect();
    let staged: Vec<Result<Vec<DensityOperator>, CliError>> = grid
        .states
        .par_iter()
        .map(|psi| Ok(compose_stages(&DensityOperator::pure_ground(psi)?, seq)?))
        .collect();
    let staged = staged.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut csv = Csv::new(&["stage", "x", "y", "z", "in_span_weight"]);
    let mut stages = Vec::with_capacity(n);
    for l in 0..n {
        let pts: Vec<_> = staged
            .iter()
            .map(|s| bloch_coords(&s[l + 1], &bases[l]))
            .collect();
        for p in &pts {
            csv.row(&[
                (l + 1).to_string(),
                num(p.x),
                num(p.y),
                num(p.z),
                num(p.in_span_weight),
            ]);
        }
        let count = pts.len().max(1) as f64;
        let centroid = [
            pts.iter().map(|p| p.x).sum::<f64>() / count,
            pts.iter().map(|p| p.y).sum::<f64>() / count,
            pts.iter().map(|p| p.z).sum::<f64>() / count,
        ];
        let bounding_radius = pts
            .iter()
            .map(|p| {
                ((p.x - centroid[0]).powi(2)
                    + (p.y - centroid[1]).powi(2)
                    + (p.z - centroid[2]).powi(2))
                .sqrt()
            })
            .fold(0.0, f64::max);
        stages.push(StageGeometry {
            stage: l + 1,
            points: pts.len(),
            centroid,
            bounding_radius,
            min_in_span_weight: pts
                .iter()
                .map(|p| p.in_span_weight)
                .fold(f64::INFINITY, f64::min),
            max_in_span_weight: pts
                .iter()
                .map(|p| p.in_span_weight)
                .fold(f64::NEG_INFINITY, f64::max),
        });
    }
    Ok((
        BlochReport {
            grid_resolution: grid.resolution,
            stages,
        },
        csv,
    ))
}

pub fn cmd_bloch_export(
    cfg: &ExperimentConfig,
    seq: &PulseSequence,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let grid = initial_state_grid(cfg.grid_resolution)?;
    let (report, csv) = bloch_export(cfg, seq, &grid)?;
    let csv_path = out.join("bloch.csv");
    csv.write(&csv_path)?;
    let path = out.join("bloch_radii.json");
    write_json(&path, &report)?;
    Ok(vec![csv_path, path])
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationEntry {
    pub residual: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub field: FieldParams,
    pub rates: Rates,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Eigenvalues with modulus below `1e-9` times the spectral radius.
    pub zero_dimension: usize,
    pub slowest_rate: f64,
    pub durations: Vec<DurationEntry>,
    /// Null-space diagnostics, including the transpose-reading comparison;
    /// absent when the null-space dimension is not the expected one.
    pub null_space: Option<ZeroDiagnostics>,
}

pub fn spectrum_report(cfg: &ExperimentConfig) -> Result<SpectrumReport, CliError> {
    let angles = match &cfg.field {
        Some(f) => FieldParams::new(f.theta, f.phi, f.mu_minus, f.mu_plus),
        None => {
            let t = cfg.target_state()?;
            field_for_span(&t.psi1, &t.psi2)?.field
        }
    };
    let field = cfg.dress(&angles);
    let rates = cfg.rates();
    let l = build_liouvillian(&field, &rates, 1.0);
    let eig = spectrum(&l)?;
    let slowest_rate = slowest_rate_of(&eig)?;
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let zero_dimension = eig
        .iter()
        .filter(|z| z.norm() <= ZERO_EIG_REL_TOL * radius)
        .count();
    let durations = REPORT_RESIDUALS
        .iter()
        .map(|&residual| {
            Ok(DurationEntry {
                residual,
                duration: recommended_duration(&l, residual)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SpectrumReport {
        field,
        rates,
        eigenvalues: eig
            .iter()
            .map(|z| Eigenvalue { re: z.re, im: z.im })
            .collect(),
        zero_dimension,
        slowest_rate,
        durations,
        null_space: zero_diagnostics(&l).ok(),
    })
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let report = spectrum_report(cfg)?;
    let path = out.join("spectrum.json");
    write_json(&path, &report)?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- sweep-purity

pub fn sweep_csv(cfg: &ExperimentConfig) -> Result<Csv, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: required by sweep-purity".into()))?;
    let target = cfg.target_state()?;
    let grid = initial_state_grid(cfg.grid_resolution)?;
    let rows = purity_sweep(
        &target.psi1,
        &target.psi2,
        &sweep.weights,
        &sweep.n_list,
        &grid,
        &cfg.optimizer,
        cfg.mode,
    )?;
    let mut csv = Csv::new(&["p1", "N", "rms_objective", "max_distance", "iterations"]);
    for r in rows {
        csv.row(&[
            num(r.p1),
            r.n.to_string(),
            num(r.rms_objective),
            num(r.max_distance),
            r.iterations.to_string(),
        ]);
    }
    Ok(csv)
}

pub fn cmd_sweep_purity(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let csv = sweep_csv(cfg)?;
    let path = out.join("sweep.csv");
    csv.write(&path)?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- reproduce-paper

/// optimize → simulate → bloch-export, each into its own subdirectory.
pub fn cmd_reproduce(
    cfg: &ExperimentConfig,
    out: &Path,
    strict: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = cmd_optimize(cfg, &out.join("optimize"), strict)?;
    let seq = load_sequence(&out.join("optimize").join("result.json"))?;
    written.extend(cmd_simulate(cfg, &seq, &out.join("simulate"))?);
    written.extend(cmd_bloch_export(cfg, &seq, &out.join("bloch"))?);
    Ok(written)
}

/// Sequence used when only the target is known: the single pulse whose dark
/// plane is the target span.
pub fn span_sequence(cfg: &ExperimentConfig) -> Result<PulseSequence, CliError> {
    let t = cfg.target_state()?;
    Ok(PulseSequence::new(
        vec![field_for_span(&t.psi1, &t.psi2)?.field],
        cfg.mode,
    )?)
}
