use std::path::PathBuf;

use dce_core::bench::{dce_stream, nmse, trial_grid, EstimatorSpec, ExperimentConfig};
use dce_core::estimators::{dce_estimate, ls_from_grid};

use crate::error::{io_error, CliError, CliResult};
use crate::sweep::fmt_f64;

pub struct FitOneOptions {
    pub estimator: Option<String>,
    pub snr_db: Option<f64>,
    pub sir_db: Option<f64>,
    pub n_p: Option<usize>,
    pub trial: usize,
    pub user: usize,
    pub seed: Option<u64>,
    pub dump_loss: Option<PathBuf>,
}

fn position<T: PartialEq + std::fmt::Display>(key: &str, list: &[T], want: Option<T>) -> CliResult<usize> {
    match want {
        None => Ok(0),
        Some(w) => list
            .iter()
            .position(|x| *x == w)
            .ok_or_else(|| CliError::Config(format!("{key}: {w} is not in the configured list"))),
    }
}

/// Fits the decoder to the grid a sweep would draw at one operating point.
pub fn run(mut cfg: ExperimentConfig, opts: &FitOneOptions) -> CliResult<()> {
    if let Some(seed) = opts.seed {
        cfg.run.seed = seed;
    }
    let resolved = cfg.resolve_estimators()?;
    let e_idx = match &opts.estimator {
        Some(id) => resolved
            .iter()
            .position(|e| &e.id == id)
            .ok_or_else(|| CliError::Config(format!("estimator: no estimator with id {id:?}")))?,
        None => resolved
            .iter()
            .position(|e| matches!(e.spec, EstimatorSpec::Dce { .. }))
            .ok_or_else(|| CliError::Config("estimators: no dce estimator configured".into()))?,
    };
    let EstimatorSpec::Dce { arch, fit } = &resolved[e_idx].spec else {
        return Err(CliError::Config(format!(
            "estimator: {:?} is not a dce estimator",
            resolved[e_idx].id
        )));
    };
    let snr_idx = position("noise.snr_db", &cfg.noise.snr_db, opts.snr_db)?;
    let np_idx = position("grid.n_p", &cfg.pilot_lengths(), opts.n_p)?;
    let sirs: Vec<f64> = cfg.contamination_points().iter().map(|c| c.sir_db).collect();
    let sir_idx = position("contamination.sir_db", &sirs, opts.sir_db)?;

    let g = trial_grid(&cfg, np_idx, sir_idx, snr_idx, opts.trial)?;
    let alloc = &g.scene.allocation;
    if opts.user >= alloc.num_users() {
        return Err(CliError::Config(format!("user: only {} users configured", alloc.num_users())));
    }
    let mut rng = dce_stream(cfg.run.seed, opts.trial, e_idx);
    let (est, report) = dce_estimate(&g.y, alloc, opts.user, arch, fit, &mut rng)?;
    let reference = g.reference_channel(opts.user)?;
    let ls = ls_from_grid(&g.y, alloc, opts.user)?;

    if let Some(path) = &opts.dump_loss {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_error("cannot write", path, e))?;
        let fail = |e: csv::Error| io_error("cannot write", path, e);
        w.write_record(["epoch", "loss"]).map_err(fail)?;
        for (epoch, loss) in report.loss_trace.iter().enumerate() {
            w.write_record([epoch.to_string(), fmt_f64(*loss)]).map_err(fail)?;
        }
        w.flush().map_err(|e| io_error("cannot write", path, e))?;
    }
    println!(
        "{} k={} epochs={} snr_db={} trial={} final_loss={:e} fit_seconds={:.2}",
        resolved[e_idx].id,
        arch.width,
        report.epochs,
        cfg.noise.snr_db[snr_idx],
        opts.trial,
        report.final_loss,
        est.elapsed.as_secs_f64()
    );
    println!("nmse {}", fmt_f64(nmse(&reference, &est.h)?));
    println!("nmse_ls {}", fmt_f64(nmse(&reference, &ls.h)?));
    Ok(())
}
