//! `madelung`: run, audit and calibrate quantum-fluid scenarios.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use madelung_core::pipeline::{run, run_audit, run_calibration, RunOptions};
use madelung_core::{Error, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "madelung", version, about = "Quantum fluid dynamics of one-dimensional wavefunctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a scenario and write field frames, audits, streamlines and a manifest.
    Run(ScenarioArgs),
    /// Audit every conservation law at two resolutions; exit 1 on any failure.
    Audit(ScenarioArgs),
    /// Fit the double-well barrier width to the target eigenvalues.
    Calibrate {
        /// Write the calibrated double-well scenario files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid points, overriding the scenario (the audit uses it as the fine grid).
    #[arg(long)]
    grid_n: Option<usize>,
    /// Uniform frame count, overriding the scenario; 0 writes only the manifest.
    #[arg(long)]
    frames: Option<usize>,
    /// Zero the energy conservation current.
    #[arg(long)]
    negative_control: bool,
    /// CI resolution.
    #[arg(long)]
    fast: bool,
}

impl ScenarioArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            grid_points: self.grid_n,
            frames: self.frames,
            negative_control: self.negative_control,
            fast: self.fast,
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(args) => {
            let config = ScenarioConfig::load(&args.scenario)?;
            let m = run(&config, &args.out, &args.options())?;
            println!(
                "{}: {} frames on {} points, E = {:.10}, {} files in {}",
                m.scenario,
                m.time.frames,
                m.grid.points,
                m.physics.energy,
                m.files.len(),
                args.out.display()
            );
            if let Some(s) = &m.streamlines {
                println!(
                    "streamlines: {} seeds, {} complete, {} crossings, mass drift {:.3e}",
                    s.seeds, s.complete, s.crossings, s.max_relative_mass_drift
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit(args) => {
            let config = ScenarioConfig::load(&args.scenario)?;
            let outcome = run_audit(&config, &args.out, &args.options())?;
            for c in &outcome.checks {
                println!(
                    "{:<5} {:<30} t={:<10.6} coarse={:.3e} fine={:.3e} ratio={:.3}",
                    if c.pass { "pass" } else { "FAIL" },
                    c.name,
                    c.t,
                    c.coarse,
                    c.fine,
                    c.ratio()
                );
            }
            let failures = outcome.failures();
            if failures.is_empty() {
                println!("all {} audits passed", outcome.checks.len());
                Ok(ExitCode::SUCCESS)
            } else {
                for c in &failures {
                    eprintln!("audit failed: {} at t = {} ({})", c.name, c.t, c.criterion.describe());
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Calibrate { out } => {
            let o = run_calibration(out.as_deref())?;
            let c = &o.calibration;
            println!("calibrated barrier half-width a = {:.12}", c.barrier_half_width);
            println!("E1 = {:.10} (error {:.2e}), E2 = {:.10} (error {:.2e})", c.e1, c.err1, c.e2, c.err2);
            if let Some(r) = &o.tunneling.calibration {
                let a = o.tunneling.potential.as_double_well().map(|w| w.barrier_half_width).unwrap_or(f64::NAN);
                println!("grid-aligned a = {a} (unit {}), E1 = {:.10}, E2 = {:.10}", r.alignment_unit, r.e1, r.e2);
            }
            if let Some(dir) = out {
                println!("wrote tunneling.toml and stationary.toml to {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
