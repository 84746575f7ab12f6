use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use revamp_bench::config::{Estimator, ExperimentConfig};
use revamp_bench::error::{BenchError, Result};
use revamp_bench::experiment::{run_experiment, write_runs_csv, write_summary_csv};
use revamp_bench::generate::generate_instance;
use revamp_bench::parallel::{parallel_map, resolve_threads};
use revamp_bench::svg::write_nmse_svg;
use revamp_bench::verify;

/// SNR-sweep benchmark of EP strategies on linear Gaussian measurement
/// models, scored by NMSE against a brute-force MMSE reference.
#[derive(Parser)]
#[command(name = "revamp-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured SNR sweep and write runs.csv / summary.csv.
    Run {
        /// Experiment config file (flat `key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's estimator list (comma separated).
        #[arg(long)]
        strategies: Option<String>,
        /// Worker threads (the REVAMP_THREADS environment variable wins).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write an NMSE-vs-SNR chart (nmse.svg).
        #[arg(long)]
        svg: bool,
    },
    /// Run the randomized invariant battery and print one line per check.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the brute-force MMSE reference on the configured instances.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            strategies,
            threads,
            svg,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(out) = out {
                cfg.output_path = out;
            }
            if let Some(list) = strategies {
                cfg.strategies = list
                    .split(',')
                    .map(|s| s.trim().parse::<Estimator>().map_err(BenchError::Config))
                    .collect::<Result<Vec<_>>>()?;
            }
            if svg {
                cfg.emit_svg = true;
            }
            cfg.validate()?;
            let threads = resolve_threads(threads)?;

            let started = Instant::now();
            let output = run_experiment(&cfg, threads)?;
            std::fs::create_dir_all(&cfg.output_path)?;
            let runs_path = cfg.output_path.join("runs.csv");
            let summary_path = cfg.output_path.join("summary.csv");
            write_runs_csv(&runs_path, &output.records)?;
            write_summary_csv(&summary_path, &output.summary)?;
            if cfg.emit_svg {
                let title = format!(
                    "{} {}x{}, {} instances per SNR",
                    cfg.scenario, cfg.m, cfg.n, cfg.instances_per_snr
                );
                write_nmse_svg(&cfg.output_path.join("nmse.svg"), &output.summary, &title)?;
            }
            eprintln!(
                "{} records in {:.1}s on {threads} threads -> {}",
                output.records.len(),
                started.elapsed().as_secs_f64(),
                cfg.output_path.display()
            );
            Ok(())
        }
        Command::Verify { seed } => {
            let results = verify::run_all(seed);
            let mut all_ok = true;
            for r in &results {
                println!(
                    "{:<52} {} ({})",
                    r.name,
                    if r.passed { "pass" } else { "FAIL" },
                    r.detail
                );
                all_ok &= r.passed;
            }
            if all_ok {
                Ok(())
            } else {
                Err(BenchError::Runtime("verification battery failed".into()))
            }
        }
        Command::Oracle {
            config,
            seed,
            threads,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            cfg.validate()?;
            let threads = resolve_threads(threads)?;
            let total = Instant::now();
            for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
                let level = Instant::now();
                let times: Vec<f64> = parallel_map(cfg.instances_per_snr, threads, |i| {
                    let instance = generate_instance(&cfg, snr_idx, i as u64);
                    let one = Instant::now();
                    revamp::oracle::brute_force_mmse(&instance.problem)
                        .map(|_| one.elapsed().as_secs_f64())
                        .unwrap_or(f64::NAN)
                });
                let mean_ms = 1e3 * times.iter().sum::<f64>() / times.len() as f64;
                println!(
                    "snr {snr_db:>6.1} dB: {} instances, {mean_ms:.2} ms/instance, {:.2}s level total",
                    times.len(),
                    level.elapsed().as_secs_f64()
                );
            }
            println!(
                "total {:.2}s on {threads} threads",
                total.elapsed().as_secs_f64()
            );
            Ok(())
        }
    }
}
