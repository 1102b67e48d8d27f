use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpg_visco::driver::calibrate::{moduli_csv, run_calibrate};
use dpg_visco::driver::config::{Mode, RunConfig, Study};
use dpg_visco::driver::output::{write_convergence_csv, write_manifest, write_vtk};
use dpg_visco::driver::simulate::{run_simulate_with, write_simulation_outputs};
use dpg_visco::driver::verify::run_verify;
use dpg_visco::Error;

#[derive(Parser)]
#[command(name = "dpg-visco", version, about = "DPG solver for time-harmonic linear viscoelasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study against the manufactured solution.
    Verify(RunArgs),
    /// Recover E* from DMA readings.
    Calibrate(RunArgs),
    /// Adaptive forced-vibration run with the clamp force as output.
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: output_dir from the config, else ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    dp: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

fn load(mode: Mode, args: &RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "{} is a {:?} config, not {:?}",
            args.config.display(),
            cfg.mode,
            mode
        )));
    }
    if let Some(p) = args.p {
        cfg.discretization.p = p;
    }
    if let Some(dp) = args.dp {
        cfg.discretization.dp = dp;
    }
    if let Some(n) = args.max_steps {
        cfg.adapt.max_steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, args: &RunArgs) -> Result<PathBuf, Error> {
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn verify(args: &RunArgs) -> Result<(), Error> {
    let cfg = load(Mode::Verify, args)?;
    let dir = out_dir(&cfg, args)?;
    println!("{:>4} {:>3} {:>12} {:>9} {:>12} {:>12}", "step", "p", "h_max", "dofs", "rel_h1", "residual");
    let report = run_verify(&cfg, |r, sol| {
        println!(
            "{:>4} {:>3} {:>12.4e} {:>9} {:>12.4e} {:>12.4e}",
            r.step,
            r.p,
            r.h_max,
            r.dofs,
            r.rel_h1_error.unwrap_or(f64::NAN),
            r.global_residual
        );
        write_vtk(&dir.join(format!("fields_step{}.vtk", r.step)), sol, &format!("verify level {}", r.step))
    })?;
    write_convergence_csv(&dir.join("convergence.csv"), &report.records)?;
    let what = match report.study {
        Study::H => "h-rate (slope of log error vs log h)",
        Study::P => "slope of log error vs p^1.25",
    };
    let mut header = vec![("mode".to_string(), "verify".to_string())];
    for (name, fit) in [("fit", report.fit), ("fit_all_levels", report.fit_all)] {
        if let Some(f) = fit {
            println!("{name}: {what} = {:.4}, R^2 = {:.4}", f.slope, f.r2);
            header.push((name.to_string(), format!("slope {:.16e} r2 {:.16e}", f.slope, f.r2)));
        }
    }
    header.push(("strictly_decreasing".into(), report.strictly_decreasing.to_string()));
    write_manifest(&dir.join("manifest.txt"), &header, &cfg.to_toml_string()?)
}

fn calibrate(args: &RunArgs) -> Result<(), Error> {
    let cfg = load(Mode::Calibrate, args)?;
    let dir = out_dir(&cfg, args)?;
    let csv = moduli_csv(&run_calibrate(&cfg)?);
    print!("{csv}");
    let path = dir.join("moduli.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    let header = [("mode".to_string(), "calibrate".to_string())];
    write_manifest(&dir.join("manifest.txt"), &header, &cfg.to_toml_string()?)
}

fn simulate(args: &RunArgs) -> Result<(), Error> {
    let cfg = load(Mode::Simulate, args)?;
    let dir = out_dir(&cfg, args)?;
    let outcome = run_simulate_with(&cfg, |step, rec| {
        let force = rec
            .qoi
            .map_or_else(|| "-".to_string(), |q| format!("{:.6e} {:+.6e}i", q.re, q.im));
        println!(
            "step {:>2}: {:>8} dofs, residual {:.4e}, force {force} ({}, {:.2?})",
            step.step,
            rec.dofs,
            rec.global_residual,
            step.solution.report.method,
            step.solution.report.wall_time
        );
    })?;
    if let (Some(reference), Some(q)) = (
        outcome.simulation.reference_force,
        outcome.records.last().and_then(|r| r.qoi),
    ) {
        println!(
            "|F_h| = {:.6e} N, measured |F| = {reference:.6e} N, ratio {:.4}, tan(arg F_h) = {:.6}",
            q.norm(),
            q.norm() / reference,
            q.im / q.re
        );
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    write_simulation_outputs(&dir, &cfg, &outcome)
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_solver_failure() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
