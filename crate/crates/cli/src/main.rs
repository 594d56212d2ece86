use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ccm_cli::config::RunConfig;
use ccm_cli::pipeline::{self, Tolerances, DEFAULT_TOL_EIG, DEFAULT_TOL_SIM};
use ccm_cli::{repro, Failure};

/// Characteristic and coupled characteristic modes of dipole arrays.
#[derive(Parser)]
#[command(name = "ccm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in a configuration file.
    Run(RunArgs),
    /// Compare coupled modes against the full-space solution.
    Validate(RunArgs),
    /// Regenerate the reference tables.
    Tables(TablesArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface compatibility; nothing here is random.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest relative eigenvalue error accepted per mode.
    #[arg(long, default_value_t = DEFAULT_TOL_EIG)]
    tol_eig: f64,
    /// Smallest current similarity accepted per mode.
    #[arg(long, default_value_t = DEFAULT_TOL_SIM)]
    tol_sim: f64,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, default_value = repro::DEFAULT_DIR)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            eig: self.tol_eig,
            sim: self.tol_sim,
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let outcome = pipeline::run(&cfg, &out, args.tolerances())?;
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    match outcome.validation {
        Some(report) => report.check(),
        None => Ok(()),
    }
}

fn validate(args: RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load(&args.config)?;
    let study = pipeline::study(&cfg, true)?;
    let coupled = study.coupled.as_ref().expect("coupled study");
    let report = pipeline::validate(coupled, &study.blocks, args.tolerances())?;
    println!(
        "{:>4}  {:<5}  {:>14}  {:>14}  {:>11}  {:>12}  status",
        "mode", "label", "lambda_c", "lambda_full", "eig_rel_err", "similarity"
    );
    for (j, r) in report.rows.iter().enumerate() {
        println!(
            "{:>4}  {:<5}  {:>14.6e}  {:>14.6e}  {:>11.3e}  {:>12.9}  {}",
            j + 1,
            r.label,
            r.lambda_c,
            r.lambda_full,
            r.eig_rel_err,
            r.current_similarity,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    report.check()?;
    println!(
        "PASS: {} modes within tol_eig {} and tol_sim {}",
        report.rows.len(),
        report.tolerances.eig,
        report.tolerances.sim
    );
    Ok(())
}

fn tables(args: TablesArgs) -> Result<(), Failure> {
    for path in repro::write_all(&args.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage_error { 3 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::Tables(args) => tables(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
