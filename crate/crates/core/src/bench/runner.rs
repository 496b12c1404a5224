//! Monte Carlo sweep over (pilot length, SIR, SNR, trial).

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::error::{Error, Result};
use crate::estimators::{
    dce_denoise, ls_from_grid, ls_noise_var, mmse_estimate, sample_covariance, CovarianceModel,
};
use crate::numerics::{ComplexMatrix, RngStream};
use crate::signal::{
    build_received_grid, extract_user_signal, make_pilot_allocation, ChannelScene, ContaminationSpec, ReceivedGrid,
};

use super::config::{EstimatorSpec, ExperimentConfig, ResolvedEstimator};
use super::metrics::{nmse, sinr_and_se};

/// Stream id reserved for sample-covariance training data.
const TRAINING_STREAM: u64 = u64::MAX;

/// One metric value for one estimator, operating point and trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub estimator: String,
    pub snr_db: f64,
    pub sir_db: Option<f64>,
    pub trial: usize,
    /// `nmse` (mean over in-cell users) or `se_<combiner>` (mean per-user SE).
    pub metric: String,
    pub value: f64,
    /// Set when the estimator failed; `value` is then NaN.
    pub error: Option<String>,
}

/// `σ²` for unit transmit power at the given SNR.
pub fn noise_var_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

struct Point {
    np_idx: usize,
    sir_idx: usize,
    snr_idx: usize,
    trial: usize,
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    model: ChannelModel,
    estimators: Vec<ResolvedEstimator>,
    pilot_lengths: Vec<usize>,
    contamination: Vec<ContaminationSpec>,
    genie: Option<CovarianceModel>,
    /// Keyed by `(np_idx, snr_idx, training size)`.
    sampled: HashMap<(usize, usize, usize), CovarianceModel>,
}

/// Runs the experiment with the configured number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_experiment_with_progress(cfg, &|_, _| {})
}

/// As [`run_experiment`], calling `progress(done, total)` after each unit of
/// work (one trial at one operating point).
///
/// Configuration errors abort; estimator failures are recorded per record.
/// Records come out ordered by pilot length, estimator, SIR, SNR, trial and
/// metric, independent of thread count.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let threads = cfg
        .run
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("run.threads: {e}")))?;
    pool.install(|| run_in_pool(cfg, progress))
}

fn run_in_pool(cfg: &ExperimentConfig, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<Vec<ResultRecord>> {
    let plan = Plan::new(cfg)?;
    let snrs = &cfg.noise.snr_db;
    let trials = cfg.run.trials;
    let mut points = Vec::new();
    for np_idx in 0..plan.pilot_lengths.len() {
        for sir_idx in 0..plan.contamination.len() {
            for snr_idx in 0..snrs.len() {
                for trial in 0..trials {
                    points.push(Point {
                        np_idx,
                        sir_idx,
                        snr_idx,
                        trial,
                    });
                }
            }
        }
    }
    let total = points.len();
    let done = AtomicUsize::new(0);
    let per_point: Vec<Vec<Vec<ResultRecord>>> = points
        .par_iter()
        .map(|p| {
            let out = plan.run_point(p);
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            out
        })
        .collect();

    // points are np-major then sir, snr, trial; emit estimator-major within each np
    let block = plan.contamination.len() * snrs.len() * trials;
    let mut records = Vec::new();
    for np_idx in 0..plan.pilot_lengths.len() {
        let chunk = &per_point[np_idx * block..(np_idx + 1) * block];
        for e in 0..plan.estimators.len() {
            for point in chunk {
                records.extend(point[e].iter().cloned());
            }
        }
    }
    Ok(records)
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let model = ChannelModel::new(cfg.channel_spec())?;
        let estimators = cfg.resolve_estimators()?;
        let pilot_lengths = cfg.pilot_lengths();
        let needs_genie = estimators.iter().any(|e| e.spec == EstimatorSpec::MmseGenie);
        let genie = if needs_genie {
            let (r_sp, r_f) = model.covariance();
            Some(CovarianceModel::genie(r_sp, r_f)?)
        } else {
            None
        };
        let mut plan = Self {
            cfg,
            model,
            estimators,
            pilot_lengths,
            contamination: cfg.contamination_points(),
            genie,
            sampled: HashMap::new(),
        };
        let mut sizes: Vec<usize> = plan
            .estimators
            .iter()
            .filter_map(|e| match e.spec {
                EstimatorSpec::MmseSample { training } => Some(training),
                _ => None,
            })
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut jobs = Vec::new();
        for np_idx in 0..plan.pilot_lengths.len() {
            for snr_idx in 0..cfg.noise.snr_db.len() {
                for &t in &sizes {
                    jobs.push((np_idx, snr_idx, t));
                }
            }
        }
        let trained: Vec<_> = jobs
            .par_iter()
            .map(|&(np_idx, snr_idx, t)| plan.train(np_idx, snr_idx, t).map(|c| ((np_idx, snr_idx, t), c)))
            .collect::<Result<_>>()?;
        plan.sampled = trained.into_iter().collect();
        Ok(plan)
    }

    /// `T` noisy LS estimates `h + CN(0, σ²/(ρN_p))` from fresh channel draws.
    fn train(&self, np_idx: usize, snr_idx: usize, t: usize) -> Result<CovarianceModel> {
        let np = self.pilot_lengths[np_idx];
        let s2 = ls_noise_var(noise_var_for_snr(self.cfg.noise.snr_db[snr_idx]), 1.0, np);
        let mut rng = RngStream::new(self.cfg.run.seed, TRAINING_STREAM).fork(((np_idx as u64) << 32) | snr_idx as u64);
        let (m, nf) = (self.cfg.grid.m, self.cfg.grid.n_f);
        let train: Vec<ComplexMatrix> = (0..t)
            .map(|_| {
                let h = self.model.realize(&mut rng).h;
                let z = ComplexMatrix::from_vec(m, nf, rng.complex_gaussian(m * nf, s2)).expect("sized");
                h.add(&z).expect("same shape")
            })
            .collect();
        sample_covariance(&train, s2)
    }

    fn scene(&self, p: &Point) -> Result<ReceivedGrid> {
        trial_grid_with(
            self.cfg,
            &self.model,
            self.pilot_lengths[p.np_idx],
            &self.contamination[p.sir_idx],
            self.cfg.noise.snr_db[p.snr_idx],
            p.trial,
        )
    }

    /// Records for every estimator at one point, indexed by estimator.
    fn run_point(&self, p: &Point) -> Vec<Vec<ResultRecord>> {
        let snr_db = self.cfg.noise.snr_db[p.snr_idx];
        let cont = &self.contamination[p.sir_idx];
        let sir_db = (!cont.is_none()).then_some(cont.sir_db);
        let suffix = if self.pilot_lengths.len() > 1 {
            format!("_np{}", self.pilot_lengths[p.np_idx])
        } else {
            String::new()
        };
        let metrics = self.metric_names();
        let grid = self.scene(p);
        self.estimators
            .iter()
            .enumerate()
            .map(|(e_idx, est)| {
                let id = format!("{}{}", est.id, suffix);
                let values = grid
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|g| self.evaluate(p, e_idx, est, g));
                let record = |metric: &str, value: f64, error: Option<String>| ResultRecord {
                    estimator: id.clone(),
                    snr_db,
                    sir_db,
                    trial: p.trial,
                    metric: metric.into(),
                    value,
                    error,
                };
                match values {
                    Ok(v) => metrics.iter().zip(v).map(|(m, x)| record(m, x, None)).collect(),
                    Err(err) => metrics
                        .iter()
                        .map(|m| record(m, f64::NAN, Some(err.to_string())))
                        .collect(),
                }
            })
            .collect()
    }

    fn metric_names(&self) -> Vec<String> {
        let mut names = vec!["nmse".to_string()];
        if self.cfg.se.enable {
            names.extend(self.cfg.se.combiners.iter().map(|c| format!("se_{}", c.name())));
        }
        names
    }

    fn evaluate(&self, p: &Point, e_idx: usize, est: &ResolvedEstimator, g: &ReceivedGrid) -> Result<Vec<f64>> {
        let alloc = &g.scene.allocation;
        let users = alloc.num_users();
        let np = alloc.pilot_len;
        let estimates: Vec<ComplexMatrix> = match &est.spec {
            EstimatorSpec::Ls => (0..users)
                .map(|k| ls_from_grid(&g.y, alloc, k).map(|e| e.h))
                .collect::<Result<_>>()?,
            EstimatorSpec::MmseGenie | EstimatorSpec::MmseSample { .. } => {
                let cov = match est.spec {
                    EstimatorSpec::MmseSample { training } => &self.sampled[&(p.np_idx, p.snr_idx, training)],
                    _ => self.genie.as_ref().expect("genie covariance prepared"),
                };
                (0..users)
                    .map(|k| {
                        let yk = extract_user_signal(&g.y, alloc, k)?;
                        mmse_estimate(&yk, alloc.users[k].power, np, cov, g.noise_var).map(|e| e.h)
                    })
                    .collect::<Result<_>>()?
            }
            EstimatorSpec::Dce { arch, fit } => {
                let mut rng = dce_stream(self.cfg.run.seed, p.trial, e_idx);
                let d = dce_denoise(&g.y, arch, fit, &mut rng)?;
                (0..users)
                    .map(|k| ls_from_grid(&d.grid, alloc, k).map(|e| e.h))
                    .collect::<Result<_>>()?
            }
        };
        let refs: Vec<ComplexMatrix> = (0..users).map(|k| g.reference_channel(k)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        let mut total = 0.0;
        for (h, e) in refs.iter().zip(&estimates) {
            total += nmse(h, e)?;
        }
        out.push(total / users as f64);
        if self.cfg.se.enable {
            let pre = self.cfg.se.prefactor.value(np, self.cfg.grid.n);
            for &c in &self.cfg.se.combiners {
                let power = alloc.users[0].power;
                out.push(sinr_and_se(&refs, &estimates, c, power, g.noise_var, pre)?.mean_se());
            }
        }
        Ok(out)
    }
}

/// The received grid a sweep sees at one operating point, selected by index
/// into the pilot-length, SIR and SNR lists.
pub fn trial_grid(
    cfg: &ExperimentConfig,
    np_idx: usize,
    sir_idx: usize,
    snr_idx: usize,
    trial: usize,
) -> Result<ReceivedGrid> {
    cfg.validate()?;
    let lens = cfg.pilot_lengths();
    let cont = cfg.contamination_points();
    let snrs = &cfg.noise.snr_db;
    if np_idx >= lens.len() || sir_idx >= cont.len() || snr_idx >= snrs.len() {
        return Err(Error::InvalidConfig(format!(
            "operating point ({np_idx}, {sir_idx}, {snr_idx}) outside the configured sweep"
        )));
    }
    let model = ChannelModel::new(cfg.channel_spec())?;
    trial_grid_with(cfg, &model, lens[np_idx], &cont[sir_idx], snrs[snr_idx], trial)
}

fn trial_grid_with(
    cfg: &ExperimentConfig,
    model: &ChannelModel,
    pilot_len: usize,
    contamination: &ContaminationSpec,
    snr_db: f64,
    trial: usize,
) -> Result<ReceivedGrid> {
    let g = &cfg.grid;
    let base = RngStream::new(cfg.run.seed, trial as u64);
    let mut ch_rng = base.fork(1);
    let channels = (0..g.k_users).map(|_| model.realize(&mut ch_rng)).collect();
    let interferer = Some(model.realize(&mut ch_rng));
    let allocation = make_pilot_allocation(g.k_users, pilot_len, g.arrangement, g.n_f, g.n, &mut base.fork(2))?;
    let scene = ChannelScene {
        channels,
        interferer,
        allocation,
        noise_var: noise_var_for_snr(snr_db),
        data_fill: g.data_fill,
        contamination: contamination.clone(),
    };
    build_received_grid(scene, &mut base.fork(3))
}

/// Random stream driving the decoder fit of estimator `e_idx` in `trial`.
pub fn dce_stream(seed: u64, trial: usize, e_idx: usize) -> RngStream {
    RngStream::new(seed, trial as u64).fork(100 + e_idx as u64)
}

/// Aggregate statistics for one (estimator, SIR, SNR, metric) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub snr_db: f64,
    pub sir_db: Option<f64>,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (`n − 1`); zero for a single trial.
    pub std: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
}

/// Groups records by (estimator, SIR, SNR, metric) in first-seen order.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let key = |r: &ResultRecord| {
        (
            r.estimator.clone(),
            r.snr_db.to_bits(),
            r.sir_db.map(f64::to_bits),
            r.metric.clone(),
        )
    };
    let mut order = Vec::new();
    let mut groups: HashMap<_, Vec<&ResultRecord>> = HashMap::new();
    for r in records {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rs = &groups[&k];
            let ok: Vec<f64> = rs.iter().filter(|r| r.error.is_none()).map(|r| r.value).collect();
            let n = ok.len();
            let mean = if n > 0 { ok.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let std = if n > 1 {
                (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else if n == 1 {
                0.0
            } else {
                f64::NAN
            };
            SummaryRow {
                estimator: rs[0].estimator.clone(),
                snr_db: rs[0].snr_db,
                sir_db: rs[0].sir_db,
                metric: rs[0].metric.clone(),
                mean,
                std,
                trials: n,
                failures: rs.len() - n,
            }
        })
        .collect()
}
