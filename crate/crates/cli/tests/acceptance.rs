//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use darkpump::linalg::{c, frobenius, max_principal_sine, Mat4, C64};
use darkpump::{
    apply_ta, apply_tb, build_hamiltonian, build_liouvillian, closed_form_zero_modes,
    compose_sequence, dark_basis, initial_state_grid, rho_tilde, zero_diagnostics, zero_subspace,
    DensityOperator, FieldParams, Mode, PulseSequence, Rates,
};
use darkpump_cli::commands::{bloch_export, optimize, verify};
use darkpump_cli::config::{paper_config, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn gauss(r: &mut ChaCha8Rng) -> C64 {
    // Box–Muller keeps this file free of a distribution dependency.
    let (u1, u2): (f64, f64) = (r.random::<f64>().max(f64::MIN_POSITIVE), r.random());
    let rad = (-2.0 * u1.ln()).sqrt();
    c(rad * (TAU * u2).cos(), rad * (TAU * u2).sin())
}

fn random_field(r: &mut ChaCha8Rng) -> FieldParams {
    FieldParams::new(
        r.random::<f64>() * PI,
        r.random::<f64>() * TAU,
        r.random::<f64>() * TAU,
        r.random::<f64>() * TAU,
    )
    .with_xi(r.random::<f64>() * TAU)
    .with_omega(0.1 + 3.0 * r.random::<f64>())
    .with_delta(4.0 * r.random::<f64>() - 2.0)
}

fn random_density(r: &mut ChaCha8Rng) -> DensityOperator {
    let g = Mat4::from_fn(|_, _| gauss(r));
    let m = g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m / c(tr, 0.0)).unwrap()
}

fn random_trace_one_hermitian(r: &mut ChaCha8Rng) -> DensityOperator {
    let g = Mat4::from_fn(|_, _| gauss(r));
    let mut h = (g + g.adjoint()) * c(0.5, 0.0);
    let shift = (1.0 - h.trace().re) / 4.0;
    for k in 0..4 {
        h[(k, k)] += c(shift, 0.0);
    }
    DensityOperator::from_matrix_unchecked(h)
}

fn criterion_1() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let fp = random_field(&mut r);
        let h = build_hamiltonian(&fp, 1.0);
        let b = dark_basis(&fp);
        let norm = frobenius(&h);
        worst = worst
            .max((h * b.n1_ket()).norm() / norm)
            .max((h * b.n2_ket()).norm() / norm);
    }
    outcome(
        worst < 1e-12,
        format!("10^4 draws, max |H n|/|H| = {worst:.2e} (< 1e-12)"),
    )
}

fn criterion_2() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    let mut worst_sine: f64 = 0.0;
    let mut min_alpha_lr: f64 = f64::INFINITY;
    let mut max_beta_lr: f64 = 0.0;
    for k in 0..2000 {
        let (mode, rates) = if k % 2 == 0 {
            (Mode::Alpha, Rates::alpha(0.2 + 2.8 * r.random::<f64>()))
        } else {
            let mut d = || 0.2 + 2.8 * r.random::<f64>();
            (Mode::Beta, Rates::beta(d(), d(), d()))
        };
        let fp = random_field(&mut r);
        let l = build_liouvillian(&fp, &rates, 1.0);
        let (Ok(zs), Ok(diag)) = (zero_subspace(&l), zero_diagnostics(&l)) else {
            ok = false;
            continue;
        };
        ok &= zs.dimension == mode.zero_dimension();
        let exact = closed_form_zero_modes(&dark_basis(&fp), mode);
        worst_sine = worst_sine
            .max(max_principal_sine(
                &zs.right_matrix(),
                &exact.right_matrix(),
            ))
            .max(max_principal_sine(&zs.left_matrix(), &exact.left_matrix()));
        match mode {
            Mode::Alpha => min_alpha_lr = min_alpha_lr.min(diag.left_right_sine),
            Mode::Beta => max_beta_lr = max_beta_lr.max(diag.left_right_sine),
        }
    }
    ok &= worst_sine < 1e-9 && min_alpha_lr > 1e-3 && max_beta_lr < 1e-9;
    outcome(
        ok,
        format!(
            "10^3 draws per mode, dims 4/3, closed-form sine {worst_sine:.1e} (< 1e-9), \
             left/right sine alpha >= {min_alpha_lr:.3}, beta <= {max_beta_lr:.1e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut tilde_err: f64 = 0.0;
    let mut map_err: f64 = 0.0;
    for _ in 0..1000 {
        let fp = random_field(&mut r);
        let n2 = dark_basis(&fp).n2_ket();
        tilde_err = tilde_err.max(frobenius(&(rho_tilde(&fp).matrix() - n2 * n2.adjoint())));
        let rho = random_trace_one_hermitian(&mut r);
        let a = apply_ta(&rho, &dark_basis(&fp)).unwrap();
        let b = apply_tb(&rho, &fp).unwrap();
        map_err = map_err.max(frobenius(&(a.matrix() - b.matrix())));
    }
    outcome(
        tilde_err < 1e-12 && map_err < 1e-12,
        format!("|rho~ - |n2><n2|| = {tilde_err:.1e}, |T_b - T_a| = {map_err:.1e} over 10^3 states (< 1e-12)"),
    )
}

fn criterion_4() -> Outcome {
    let mut cfg = paper_config();
    cfg.verify_states = 50;
    cfg.omega_peak = 1.0;
    cfg.rates.gamma_in = 1.0;
    cfg.integrator.residual = 1e-10;
    let mut parts = Vec::new();
    let mut ok = true;
    for (mode, ext, pump) in [(Mode::Alpha, 0.0, 0.0), (Mode::Beta, 1.0, 1.0)] {
        cfg.mode = mode;
        cfg.rates.gamma_ext = ext;
        cfg.rates.r_pump = pump;
        match verify(&cfg) {
            Ok(rep) => {
                ok &= rep.entries.len() == 50 && rep.max_distance < 1e-6;
                parts.push(format!("{mode:?} max {:.1e}", rep.max_distance));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{mode:?} error {e}"));
            }
        }
    }
    outcome(
        ok,
        format!(
            "50 states per mode, residual 1e-10: {} (< 1e-6)",
            parts.join(", ")
        ),
    )
}

fn criterion_5(cfg: &ExperimentConfig) -> (Outcome, Option<PulseSequence>) {
    match optimize(cfg) {
        Ok(rep) => {
            let ok =
                rep.objective_value < 1e-4 && rep.test.max_hs < 1e-3 && rep.test_states == 1000;
            let detail = format!(
                "N=4, grid RMS {:.2e} (< 1e-4) over {} states, test max {:.2e} (< 1e-3) over {} states; \
                 RMS mismatch J {:.4} (mixed-target floor)",
                rep.objective_value,
                initial_state_grid(cfg.grid_resolution).map(|g| g.len()).unwrap_or(0),
                rep.test.max_hs,
                rep.test_states,
                rep.training.rms_mismatch
            );
            (outcome(ok, detail), Some(rep.sequence))
        }
        Err(e) => (outcome(false, format!("optimizer error: {e}")), None),
    }
}

fn criterion_6(cfg: &ExperimentConfig, seq: Option<&PulseSequence>) -> Outcome {
    let Some(seq) = seq else {
        return outcome(false, "no optimized sequence");
    };
    let grid = initial_state_grid(cfg.grid_resolution).unwrap();
    match bloch_export(cfg, seq, &grid) {
        Ok((rep, _)) => {
            let radii: Vec<f64> = rep.stages.iter().map(|s| s.bounding_radius).collect();
            let last = *radii.last().unwrap();
            let ok = last < 1e-3 && radii[..radii.len() - 1].iter().all(|&r| last < r);
            let shown: Vec<String> = radii.iter().map(|r| format!("{r:.2e}")).collect();
            outcome(
                ok,
                format!(
                    "stage radii [{}], final < 1e-3 and smallest",
                    shown.join(", ")
                ),
            )
        }
        Err(e) => outcome(false, format!("export error: {e}")),
    }
}

fn criterion_7() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let mode = if k % 2 == 0 { Mode::Alpha } else { Mode::Beta };
        let n = 1 + k % 6;
        let seq = PulseSequence::new((0..n).map(|_| random_field(&mut r)).collect(), mode).unwrap();
        let (a, b) = (random_density(&mut r), random_density(&mut r));
        let p = r.random::<f64>();
        let mixed =
            DensityOperator::new(a.matrix() * c(p, 0.0) + b.matrix() * c(1.0 - p, 0.0)).unwrap();
        let lhs = compose_sequence(&mixed, &seq).unwrap();
        let ra = compose_sequence(&a, &seq).unwrap();
        let rb = compose_sequence(&b, &seq).unwrap();
        let rhs = ra.matrix() * c(p, 0.0) + rb.matrix() * c(1.0 - p, 0.0);
        worst = worst.max(frobenius(&(lhs.matrix() - rhs)));
    }
    outcome(
        worst < 1e-12,
        format!("10^3 mixtures, max deviation {worst:.1e} (< 1e-12)"),
    )
}

fn criterion_8(base: &ExperimentConfig) -> Outcome {
    let mut cfg = base.clone();
    cfg.target.weights = [0.02, 0.98];
    let mut rows = Vec::new();
    for n in [4, 8] {
        cfg.steps = n;
        match optimize(&cfg) {
            Ok(rep) => rows.push((n, rep.objective_value, rep.iterations)),
            Err(e) => return outcome(false, format!("N={n}: {e}")),
        }
    }
    println!("    p1     N  rms_objective  iterations");
    for (n, obj, it) in &rows {
        println!("    0.02  {n}  {obj:.6e}   {it}");
    }
    let ok = rows[1].1 < rows[0].1;
    outcome(
        ok,
        format!(
            "weights (0.02, 0.98): N=8 {:.2e} < N=4 {:.2e}",
            rows[1].1, rows[0].1
        ),
    )
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "metadata.json") {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn small_config(dir: &Path) -> PathBuf {
    let mut cfg = paper_config();
    cfg.grid_resolution = 3;
    cfg.optimizer.restarts = 3;
    cfg.optimizer.max_iter = 300;
    cfg.test_states = 200;
    cfg.verify_states = 6;
    cfg.initial_states = None;
    cfg.sweep = Some(darkpump_cli::config::SweepConfig {
        weights: vec![0.5, 0.1],
        n_list: vec![2, 3],
    });
    let path = dir.join("small.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_darkpump");
    let work = tempfile::tempdir().unwrap();
    let cfg = small_config(work.path());
    let cfg = cfg.to_str().unwrap();
    let run = |args: &[&str], out: &Path, threads: &str| -> Result<(), String> {
        let status = Command::new(bin)
            .args(args)
            .args([
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "42",
                "--threads",
                threads,
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if status.status.success() {
            Ok(())
        } else {
            Err(format!(
                "{args:?} exited with {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            ))
        }
    };
    let seq_dir = work.path().join("seq");
    if let Err(e) = run(&["optimize", "--config", cfg], &seq_dir, "2") {
        return outcome(false, e);
    }
    let seq = seq_dir.join("result.json");
    let seq = seq.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("optimize", vec!["optimize", "--config", cfg]),
        (
            "simulate",
            vec!["simulate", "--config", cfg, "--sequence", seq],
        ),
        ("verify", vec!["verify", "--config", cfg]),
        (
            "bloch-export",
            vec!["bloch-export", "--config", cfg, "--sequence", seq],
        ),
        ("spectrum", vec!["spectrum", "--config", cfg]),
        ("sweep-purity", vec!["sweep-purity", "--config", cfg]),
        ("reproduce-paper", vec!["reproduce-paper"]),
    ];
    let mut checked = Vec::new();
    for (name, args) in &commands {
        let a = work.path().join(format!("{name}-a"));
        let b = work.path().join(format!("{name}-b"));
        if let Err(e) = run(args, &a, "1").and_then(|_| run(args, &b, "4")) {
            return outcome(false, e);
        }
        let (fa, fb) = (files_under(&a), files_under(&b));
        if fa.is_empty() || fa != fb {
            return outcome(false, format!("{name}: artifacts differ between runs"));
        }
        checked.push(format!("{name} ({} files)", fa.len()));
    }
    outcome(
        true,
        format!("byte-identical with 1 vs 4 threads: {}", checked.join(", ")),
    )
}

fn report(label: &str, start: Instant, o: &Outcome, failures: &mut usize) {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    if !o.passed {
        *failures += 1;
    }
    println!(
        "{tag} {label}: {} [{:.1}s]",
        o.detail,
        start.elapsed().as_secs_f64()
    );
}

fn main() {
    let mut failures = 0;
    let cfg = paper_config();

    let t = Instant::now();
    report(
        "1 dark-state annihilation",
        t,
        &criterion_1(),
        &mut failures,
    );
    let t = Instant::now();
    report(
        "2 zero-subspace dimensions",
        t,
        &criterion_2(),
        &mut failures,
    );
    let t = Instant::now();
    report("3 steady-state identity", t, &criterion_3(), &mut failures);
    let t = Instant::now();
    report(
        "4 map-vs-dynamics certification",
        t,
        &criterion_4(),
        &mut failures,
    );
    let t = Instant::now();
    let (o5, seq) = criterion_5(&cfg);
    report("5 main reproduction", t, &o5, &mut failures);
    let t = Instant::now();
    report(
        "6 stage geometry",
        t,
        &criterion_6(&cfg, seq.as_ref()),
        &mut failures,
    );
    let t = Instant::now();
    report("7 linearity", t, &criterion_7(), &mut failures);
    let t = Instant::now();
    report("8 purity trend", t, &criterion_8(&cfg), &mut failures);
    let t = Instant::now();
    report("9 determinism", t, &criterion_9(), &mut failures);

    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
