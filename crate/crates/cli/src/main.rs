//! `fairbench`: generate synthetic data, run experiments, render reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairbench::datasets::write_tabular;
use fairbench::harness::{emit_report, run_experiment, ExperimentConfig, ReportFormat};
use fairbench::policies::PolicyKind;
use fairbench::synthgen::{generate, Preset};
use fairbench::{Error, Result};

#[derive(Parser)]
#[command(name = "fairbench", version, about = "Fairness/accuracy trade-off benchmarks for binary classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic preset as CSV, plus a schema that loads it back.
    Generate {
        /// S-D, S-P, I-D or I-P.
        #[arg(long, value_parser = Preset::from_name)]
        preset: Preset,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment described by a TOML config.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Restrict the run to one threshold policy.
        #[arg(long, value_parser = PolicyKind::from_name)]
        policy: Option<PolicyKind>,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Derive report tables or plots from a finished run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "csv", value_parser = ReportFormat::from_name)]
        format: ReportFormat,
    },
}

/// Schema path written next to a generated CSV.
fn schema_path(out: &Path) -> PathBuf {
    out.with_extension("schema.toml")
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { preset, n, seed, out } => {
            let data = generate(&preset.spec(n, seed))?;
            let schema = write_tabular(&data, &out)?;
            let schema_out = schema_path(&out);
            std::fs::write(&schema_out, toml::to_string(&schema).map_err(|e| Error::Config(e.to_string()))?)?;
            println!("{} rows -> {} (schema {})", data.n(), out.display(), schema_out.display());
            Ok(true)
        }
        Command::Evaluate { config, policy, seed, jobs } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(policy) = policy {
                config.policies = vec![policy];
            }
            if jobs == Some(0) {
                return Err(Error::Config("--jobs must be positive".into()));
            }
            let outcome = run_experiment(&config, jobs)?;
            for row in &outcome.summary {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
                println!(
                    "{:<12} {:<20} {:<7} {:<18} acc {} DI {} EO {} theta_DI {} theta_EO {}",
                    row.dataset,
                    row.pipeline,
                    row.policy.as_str(),
                    row.status,
                    fmt(row.accuracy),
                    fmt(row.di),
                    fmt(row.eo),
                    fmt(row.theta_di),
                    fmt(row.theta_eo),
                );
            }
            for failure in &outcome.failed_pipelines {
                log::error!("{} / {}: {}", failure.dataset, failure.pipeline, failure.error);
            }
            println!("results in {}", outcome.output_dir.display());
            Ok(outcome.succeeded())
        }
        Command::Report { run, format } => {
            for path in emit_report(&run, format)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
