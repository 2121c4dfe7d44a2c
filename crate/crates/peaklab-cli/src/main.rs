//! `peaklab`: run, fit and report experiment sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use peaklab::lab::{self, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "peaklab", version, about = "Peak sections and Bergman metrics on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) the sweep described by a config file. Output goes under
    /// $PEAKLAB_OUT, or ./runs when unset.
    Run { config: PathBuf },
    /// Fit log-log rates over the top half of S and write fits.json.
    Fit { run_dir: PathBuf },
    /// Evaluate every criterion, write verdict.json, exit 0/1/2 for pass/fail/incomplete.
    Report { run_dir: PathBuf },
    /// Print the computed eigenvalues and residuals for one k.
    DumpSpectrum { run_dir: PathBuf, k: u64 },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            let dir = lab::run_pipeline(&cfg, &lab::output_root())?;
            println!("{}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { run_dir } => {
            let records = lab::load_records(&run_dir)?;
            let (ks, slopes) = run::fit_all(&records);
            println!("fit over k = {ks:?}");
            println!("{:<14} {:>12} {:>12} {:>10}", "norm", "slope", "stderr", "rms");
            for (name, f) in &slopes {
                println!("{name:<14} {:>12.6} {:>12.3e} {:>10.3e}", f.slope, f.slope_se, f.residual);
            }
            let text = serde_json::to_string_pretty(&slopes)?;
            std::fs::write(run_dir.join("fits.json"), text + "\n")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { run_dir } => {
            let verdict = lab::report(&run_dir)?;
            print!("{}", lab::report::render(&verdict));
            Ok(ExitCode::from(verdict.status.exit_code() as u8))
        }
        Command::DumpSpectrum { run_dir, k } => {
            let path = run::record_path(&run_dir, k);
            let text = std::fs::read(&path).with_context(|| format!("no record for k = {k}"))?;
            let rec: lab::KRecord = serde_json::from_slice(&text)?;
            let Some(s) = rec.spectrum else {
                bail!("k = {k} has no spectrum (status {:?})", rec.status);
            };
            println!("# k = {k}, dim H_k = {}, iterations {}", rec.dim, s.iterations);
            println!("index,value,residual");
            for (i, (v, r)) in s.values.iter().zip(&s.residuals).enumerate() {
                println!("{i},{v:.16e},{r:.16e}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
