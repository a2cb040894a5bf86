use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qem::bench::{
    copy_sweep, oracle_check, run_experiment, ExperimentConfig, MitigationReport, OracleConfig,
};

#[derive(Parser)]
#[command(name = "bench", about = "Error-mitigation benchmarks on simulated noisy circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method over the instance sweep.
    Run {
        /// TOML or JSON experiment config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// VD error against the number of copies.
    CopySweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_copies: u32,
        #[arg(long, default_value_t = 6)]
        max_copies: u32,
    },
    /// Exact-recovery checks under global depolarizing noise.
    OracleCheck {
        /// Directory for oracle.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        circuits: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Re-emit a finished run's rows.
    Export {
        /// Output directory of a previous `run`.
        #[arg(long, default_value = ".")]
        from: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out } => {
            let cfg = load_config(config.as_ref())?;
            let report = run_experiment(&cfg)?;
            report.write_all(&out)?;
            for a in report.aggregates()? {
                println!(
                    "Q={} g={} budget={} {:<7} mean={:.3e} max={:.3e} n={}",
                    a.num_qubits,
                    a.depth_factor,
                    a.budget,
                    a.method,
                    a.mean_abs_error,
                    a.max_abs_error,
                    a.count
                );
            }
            if !report.skipped.is_empty() {
                eprintln!("{} method runs skipped, see summary.json", report.skipped.len());
            }
        }
        Command::CopySweep {
            config,
            out,
            min_copies,
            max_copies,
        } => {
            let cfg = load_config(config.as_ref())?;
            let report = copy_sweep(&cfg, min_copies..=max_copies)?;
            report.write_all(&out)?;
            for a in report.aggregates()? {
                println!(
                    "Q={} g={} budget={} M={} mean={:.3e} max={:.3e}",
                    a.num_qubits, a.depth_factor, a.budget, a.copies, a.mean_abs_error, a.max_abs_error
                );
            }
        }
        Command::OracleCheck { out, circuits, p } => {
            let mut cfg = OracleConfig::default();
            if let Some(n) = circuits {
                cfg.circuits = n;
            }
            if let Some(p) = p {
                cfg.p = p;
            }
            let report = oracle_check(&cfg)?;
            for c in &report.checks {
                println!(
                    "{} {}: max |error| {:.2e} over {} cases (tol {:.0e}, {} redrawn)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_abs_error,
                    c.cases,
                    c.tolerance,
                    c.redrawn
                );
            }
            if let Some(dir) = out {
                report.write(dir)?;
            }
            if !report.passed() {
                bail!("oracle check failed");
            }
        }
        Command::Export { from, format, out } => {
            let report = MitigationReport::load(&from)
                .with_context(|| format!("reading report.json in {}", from.display()))?;
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
                None => Box::new(io::stdout().lock()),
            };
            match format {
                Format::Csv => report.write_results_csv(&mut sink)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut sink, &report.rows)?;
                    writeln!(sink)?;
                }
            }
            sink.flush()?;
        }
    }
    Ok(())
}
