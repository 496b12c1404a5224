use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use dce_core::bench::{run_experiment_with_progress, summarize, ExperimentConfig, ResultRecord, SummaryRow};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to replay a sweep. Passing this file back to `dce sweep`
/// reruns the stored config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub started_at: String,
    pub outputs: Outputs,
    /// The experiment with every default filled in.
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Outputs {
    pub dir: PathBuf,
    pub results: String,
    pub summary: String,
    pub manifest: String,
}

pub struct SweepOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub quiet: bool,
}

pub fn run(mut cfg: ExperimentConfig, opts: &SweepOptions) -> CliResult<()> {
    if let Some(seed) = opts.seed {
        cfg.run.seed = seed;
    }
    // the thread count never changes results, so it stays out of the manifest
    cfg.run.threads = None;
    let normalized = cfg.normalized()?;
    // run exactly what the manifest will hold
    let frozen = ExperimentConfig::from_json(&normalized.to_json())?;

    std::fs::create_dir_all(&opts.out).map_err(|e| io_error("cannot create", &opts.out, e))?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: frozen.run.seed,
        started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        outputs: Outputs {
            dir: opts.out.clone(),
            results: RESULTS_FILE.into(),
            summary: SUMMARY_FILE.into(),
            manifest: MANIFEST_FILE.into(),
        },
        config: normalized,
    };
    let manifest_path = opts.out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json + "\n").map_err(|e| io_error("cannot write", &manifest_path, e))?;

    let mut run_cfg = frozen;
    run_cfg.run.threads = opts.threads;
    let reported = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        if opts.quiet {
            return;
        }
        let pct = done * 100 / total;
        if reported.fetch_max(pct, Ordering::Relaxed) < pct || done == total {
            eprint!("\r{done}/{total} points");
            if done == total {
                eprintln!();
            }
        }
    };
    let records = run_experiment_with_progress(&run_cfg, &progress).map_err(|e| match e {
        dce_core::Error::InvalidConfig(m) => CliError::Config(m),
        other => CliError::Runtime(format!("sweep failed: {other}")),
    })?;

    let results_path = opts.out.join(RESULTS_FILE);
    write_results(&results_path, &records)?;
    let summary = summarize(&records);
    let summary_path = opts.out.join(SUMMARY_FILE);
    write_summary(&summary_path, &summary)?;

    let failed: Vec<&ResultRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if let Some(first) = failed.first() {
        eprintln!(
            "warning: {} of {} records failed; first: {} at {} dB, trial {}: {}",
            failed.len(),
            records.len(),
            first.estimator,
            first.snr_db,
            first.trial,
            first.error.as_deref().unwrap_or_default()
        );
    }
    if !opts.quiet {
        print_summary(&summary);
        eprintln!("wrote {}", opts.out.display());
    }
    Ok(())
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| io_error("cannot write", path, e))
}

pub fn write_results(path: &Path, records: &[ResultRecord]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| io_error("cannot write", path, e);
    w.write_record(["estimator", "snr_db", "sir_db", "trial", "metric", "value"])
        .map_err(fail)?;
    for r in records {
        w.write_record([
            r.estimator.clone(),
            fmt_f64(r.snr_db),
            fmt_opt(r.sir_db),
            r.trial.to_string(),
            r.metric.clone(),
            fmt_f64(r.value),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| io_error("cannot write", path, e))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| io_error("cannot write", path, e);
    w.write_record(["estimator", "snr_db", "sir_db", "metric", "mean", "std", "trials", "failures"])
        .map_err(fail)?;
    for r in rows {
        w.write_record([
            r.estimator.clone(),
            fmt_f64(r.snr_db),
            fmt_opt(r.sir_db),
            r.metric.clone(),
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.trials.to_string(),
            r.failures.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| io_error("cannot write", path, e))
}

fn print_summary(rows: &[SummaryRow]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<16} {:>7} {:>7} {:<10} {:>12} {:>12} {:>6}", "estimator", "snr_db", "sir_db", "metric", "mean", "std", "n");
    for r in rows {
        let sir = r.sir_db.map(|s| format!("{s}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<16} {:>7} {:>7} {:<10} {:>12.4e} {:>12.4e} {:>6}",
            r.estimator, r.snr_db, sir, r.metric, r.mean, r.std, r.trials
        );
    }
}
