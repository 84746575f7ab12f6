//! Experiment driver: SNR sweep, per-instance reference and estimator runs,
//! NMSE aggregation, CSV emission.
//!
//! Per instance the exact MMSE reference is computed once; every configured
//! estimator then runs against it. A strategy failure (the unconditional
//! strategy can block on a non-integrable belief) is recorded and excluded
//! from that strategy's NMSE sums only.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DVector;

use revamp::engine::{run as run_strategy, RunOptions};
use revamp::oracle::{brute_force_mmse, lmmse};

use crate::config::{Estimator, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::generate::generate_instance;
use crate::parallel::parallel_map;

/// One estimator on one instance.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub snr_db: f64,
    pub snr_idx: usize,
    pub instance_id: u64,
    pub estimator: String,
    /// `None` when the estimator failed on this instance.
    pub x_hat: Option<DVector<f64>>,
    pub x_mmse: DVector<f64>,
    pub sweeps_run: usize,
    pub converged: bool,
    pub rejected_updates: usize,
    pub wall_time: Duration,
    pub failure: Option<String>,
}

impl RunRecord {
    /// Squared error against the MMSE reference, when the run succeeded.
    pub fn err_sq(&self) -> Option<f64> {
        self.x_hat
            .as_ref()
            .map(|x| (x - &self.x_mmse).norm_squared())
    }

    pub fn mmse_sq(&self) -> f64 {
        self.x_mmse.norm_squared()
    }
}

/// Aggregated NMSE for one (SNR level, estimator) cell.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub estimator: String,
    pub nmse: f64,
    pub nmse_db: f64,
    pub n_instances: usize,
    pub n_failed: usize,
    pub n_nonconverged: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Runs the full sweep. Instances within an SNR level are distributed over
/// `threads` workers; aggregation is an ordered reduce over
/// (snr, instance, estimator), so the output is reproducible for any thread
/// count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut records = Vec::new();
    for snr_idx in 0..cfg.snr_grid_db.len() {
        let per_instance: Vec<Result<Vec<RunRecord>>> =
            parallel_map(cfg.instances_per_snr, threads, |i| {
                run_instance(cfg, snr_idx, i as u64)
            });
        for result in per_instance {
            records.extend(result?);
        }
    }
    let summary = summarize(cfg, &records);
    Ok(ExperimentOutput { records, summary })
}

fn run_instance(
    cfg: &ExperimentConfig,
    snr_idx: usize,
    instance_id: u64,
) -> Result<Vec<RunRecord>> {
    let instance = generate_instance(cfg, snr_idx, instance_id);
    let problem = &instance.problem;
    let x_mmse = brute_force_mmse(problem)
        .map_err(|e| BenchError::Runtime(format!("MMSE reference failed: {e}")))?
        .mean;
    let opts = RunOptions {
        max_sweeps: cfg.max_sweeps,
        tol: cfg.tol,
    };

    let mut out = Vec::with_capacity(cfg.strategies.len());
    for estimator in &cfg.strategies {
        let started = Instant::now();
        let mut record = RunRecord {
            snr_db: cfg.snr_grid_db[snr_idx],
            snr_idx,
            instance_id,
            estimator: estimator.name().to_string(),
            x_hat: None,
            x_mmse: x_mmse.clone(),
            sweeps_run: 0,
            converged: false,
            rejected_updates: 0,
            wall_time: Duration::ZERO,
            failure: None,
        };
        match estimator {
            Estimator::Lmmse => match lmmse(problem) {
                Ok(est) => {
                    record.x_hat = Some(est.mean);
                    record.converged = true;
                }
                Err(e) => record.failure = Some(e.to_string()),
            },
            Estimator::Strategy(strategy) => match run_strategy(problem, *strategy, &opts) {
                Ok(report) => {
                    record.x_hat = Some(report.x_hat);
                    record.sweeps_run = report.sweeps_run;
                    record.converged = report.converged;
                    record.rejected_updates = report.rejected_updates;
                }
                Err(e) => record.failure = Some(e.to_string()),
            },
        }
        record.wall_time = started.elapsed();
        out.push(record);
    }
    Ok(out)
}

/// NMSE per (SNR level, estimator):
/// `Σ_i ‖x̂_i − x_mmse_i‖² / Σ_i ‖x_mmse_i‖²` over the instances the
/// estimator completed.
pub fn summarize(cfg: &ExperimentConfig, records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        for estimator in &cfg.strategies {
            let name = estimator.name();
            let mut num = 0.0;
            let mut den = 0.0;
            let mut n_instances = 0usize;
            let mut n_failed = 0usize;
            let mut n_nonconverged = 0usize;
            for rec in records
                .iter()
                .filter(|r| r.snr_idx == snr_idx && r.estimator == name)
            {
                match rec.err_sq() {
                    Some(err) => {
                        num += err;
                        den += rec.mmse_sq();
                        n_instances += 1;
                        if !rec.converged {
                            n_nonconverged += 1;
                        }
                    }
                    None => n_failed += 1,
                }
            }
            let nmse = num / den;
            rows.push(SummaryRow {
                snr_db,
                estimator: name.to_string(),
                nmse,
                nmse_db: 10.0 * nmse.log10(),
                n_instances,
                n_failed,
                n_nonconverged,
            });
        }
    }
    rows
}

/// Per-run CSV. Columns:
/// `snr_db,instance_id,strategy,status,sweeps_run,converged,rejected_updates,err_sq,mmse_sq,wall_time_s,note`
pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "snr_db,instance_id,strategy,status,sweeps_run,converged,rejected_updates,err_sq,mmse_sq,wall_time_s,note"
    )?;
    for r in records {
        let status = if r.failure.is_some() { "failed" } else { "ok" };
        let err_sq = r.err_sq().map(|e| e.to_string()).unwrap_or_default();
        let note = r
            .failure
            .as_deref()
            .map(|m| m.replace([',', '\n'], ";"))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{:.6},{}",
            r.snr_db,
            r.instance_id,
            r.estimator,
            status,
            r.sweeps_run,
            r.converged,
            r.rejected_updates,
            err_sq,
            r.mmse_sq(),
            r.wall_time.as_secs_f64(),
            note
        )?;
    }
    Ok(())
}

/// Summary CSV. Columns:
/// `snr_db,strategy,nmse,nmse_db,n_instances,n_failed,n_nonconverged`
pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "snr_db,strategy,nmse,nmse_db,n_instances,n_failed,n_nonconverged"
    )?;
    for row in summary {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.snr_db,
            row.estimator,
            row.nmse,
            row.nmse_db,
            row.n_instances,
            row.n_failed,
            row.n_nonconverged
        )?;
    }
    Ok(())
}
