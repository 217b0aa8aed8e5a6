use mclflow::experiments::{run_accuracy, run_simulation, ExperimentError};
use mclflow::io::{parse_config, write_csv, write_vtk, Config, DiagnosticsRow, ExperimentKind};
use mclflow::stepper::StepError;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage:
  mclflow run --config PATH [--out DIR]    full simulation with snapshots and diagnostics
  mclflow accuracy --config PATH           time-step sweep against the exact solution
  mclflow energy-check --config PATH       verify the per-step energy inequality
  mclflow version                          print the version";

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run_cli(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

type CliError = (u8, String);

fn run_cli(args: &[String]) -> Result<(), CliError> {
    let Some(cmd) = args.first() else {
        return Err((EXIT_VALIDATION, USAGE.to_string()));
    };
    match cmd.as_str() {
        "version" => {
            println!("mclflow {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        "run" => {
            let (cfg, out_override) = load_config(&args[1..], true)?;
            cmd_run(&cfg, out_override)
        }
        "accuracy" => {
            let (cfg, _) = load_config(&args[1..], false)?;
            cmd_accuracy(&cfg)
        }
        "energy-check" => {
            let (cfg, _) = load_config(&args[1..], false)?;
            cmd_energy_check(&cfg)
        }
        other => Err((EXIT_VALIDATION, format!("unknown subcommand '{other}'\n{USAGE}"))),
    }
}

fn load_config(args: &[String], allow_out: bool) -> Result<(Config, Option<PathBuf>), CliError> {
    let mut config_path: Option<&str> = None;
    let mut out: Option<PathBuf> = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                config_path = Some(
                    it.next()
                        .ok_or((EXIT_VALIDATION, "--config requires a path".to_string()))?,
                );
            }
            "--out" if allow_out => {
                out = Some(PathBuf::from(
                    it.next().ok_or((EXIT_VALIDATION, "--out requires a directory".to_string()))?,
                ));
            }
            other => return Err((EXIT_VALIDATION, format!("unexpected argument '{other}'\n{USAGE}"))),
        }
    }
    let path = config_path.ok_or((EXIT_VALIDATION, format!("missing --config PATH\n{USAGE}")))?;
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_VALIDATION, format!("cannot read {path}: {e}")))?;
    let cfg = parse_config(&text).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    Ok((cfg, out))
}

fn solver_exit(err: ExperimentError) -> CliError {
    let code = match &err {
        ExperimentError::Step(StepError::Solver { .. }) => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    };
    (code, err.to_string())
}

fn cmd_run(cfg: &Config, out_override: Option<PathBuf>) -> Result<(), CliError> {
    if cfg.kind == ExperimentKind::Accuracy {
        return cmd_accuracy(cfg);
    }
    let out_dir = out_override.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    std::fs::create_dir_all(&out_dir).map_err(|e| (EXIT_VALIDATION, format!("cannot create {}: {e}", out_dir.display())))?;
    let spec = cfg.to_spec();
    let (stepper, state) = spec.build().map_err(solver_exit)?;
    if cfg.vtk {
        write_vtk(&out_dir.join("snapshot_000000.vtk"), &state).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    }
    let mut rows: Vec<DiagnosticsRow> = Vec::new();
    let mut snapshot_err: Option<CliError> = None;
    let every = cfg.output_every.max(1);
    let outcome = run_simulation(&stepper, state, cfg.t_end, None, false, |step, st, report| {
        rows.push(DiagnosticsRow { step, t: st.t, report: *report });
        if cfg.vtk && step % every == 0 && snapshot_err.is_none() {
            let path = out_dir.join(format!("snapshot_{step:06}.vtk"));
            if let Err(e) = write_vtk(&path, st) {
                snapshot_err = Some((EXIT_VALIDATION, e.to_string()));
            }
        }
    })
    .map_err(solver_exit)?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    if cfg.vtk {
        write_vtk(&out_dir.join("snapshot_final.vtk"), &outcome.state).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    }
    if cfg.csv {
        write_csv(&out_dir.join("diagnostics.csv"), &rows).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    }
    let last = rows.last();
    println!(
        "completed {} steps to t = {} (E_total = {}, mass drift = {})",
        outcome.steps,
        outcome.state.t,
        last.map_or(f64::NAN, |r| r.report.e_total),
        last.map_or(f64::NAN, |r| r.report.mass - rows[0].report.mass),
    );
    match outcome.steady_at {
        Some(t) => println!("steady state detected at t = {t}"),
        None => println!("no steady state detected"),
    }
    Ok(())
}

fn cmd_accuracy(cfg: &Config) -> Result<(), CliError> {
    let spec = cfg.to_spec();
    let table = run_accuracy(&spec).map_err(solver_exit)?;
    println!("{:>10}  {:>12}  {:>12}  {:>12}  {:>12}  {:>12}", "dt", "err_u", "err_v", "err_p", "err_phi", "err_q");
    for row in &table.rows {
        println!(
            "{:>10.3e}  {:>12.5e}  {:>12.5e}  {:>12.5e}  {:>12.5e}  {:>12.5e}",
            row.dt, row.err_u, row.err_v, row.err_p, row.err_phi, row.err_q
        );
    }
    for (pair, o) in table.rows.windows(2).zip(table.orders()) {
        println!(
            "order {:.3e} -> {:.3e}: u {:.2}, v {:.2}, p {:.2}, phi {:.2}",
            pair[0].dt, pair[1].dt, o[0], o[1], o[2], o[3]
        );
    }
    Ok(())
}

fn cmd_energy_check(cfg: &Config) -> Result<(), CliError> {
    let spec = cfg.to_spec();
    let (stepper, state) = spec.build().map_err(solver_exit)?;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let outcome = run_simulation(&stepper, state, cfg.t_end, None, false, |_, _, report| {
        let tol = 1e-8 * report.e_total.abs().max(1.0);
        let ratio = report.energy_residual / tol;
        if ratio > worst_ratio {
            worst_ratio = ratio;
        }
        if report.energy_residual > tol {
            violations += 1;
        }
    })
    .map_err(solver_exit)?;
    let tol_desc = "1e-8 * max(1, |E|)";
    if violations == 0 {
        println!(
            "energy law holds over {} steps: max energy residual <= tol ({tol_desc}), worst ratio {:.3e}",
            outcome.steps, worst_ratio
        );
        Ok(())
    } else {
        Err((
            EXIT_VIOLATION,
            format!(
                "energy law violated on {violations} of {} steps (tol {tol_desc}, worst ratio {:.3e})",
                outcome.steps, worst_ratio
            ),
        ))
    }
}
