//! Seeded Monte-Carlo experiments: resolution, capacity and RMSE sweeps.

use fogna::coupling::CouplingModel;
use fogna::estimator::{estimate_doa, match_to_truth, rmse};
use fogna::geometry::SensorArray;
use fogna::signalsim::{simulate, SourceScene};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::fogna_array;
use crate::config::{CoarrayChoice, ExperimentConfig};
use crate::{CliError, CliResult};

/// One simulated trial.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub array: &'a SensorArray,
    pub angles: &'a [f64],
    pub snr_db: f64,
    pub snapshots: usize,
    pub seed: u64,
    pub grid_step: f64,
    pub coupling: bool,
    pub coarray: CoarrayChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub snr_db: f64,
    pub snapshots: usize,
    pub truths: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Signed `estimate - truth` after nearest-angle matching, in truth order.
    pub errors: Vec<f64>,
    pub resolved: bool,
    pub rmse_deg: Option<f64>,
    pub failure: Option<String>,
}

impl TrialOutcome {
    pub fn max_abs_error(&self) -> Option<f64> {
        self.errors.iter().map(|e| e.abs()).reduce(f64::max)
    }

    /// All requested peaks found and each within `tolerance` of its truth.
    pub fn within(&self, tolerance: f64) -> bool {
        self.resolved && self.max_abs_error().is_some_and(|e| e <= tolerance)
    }
}

pub fn run_trial(setup: &TrialSetup) -> TrialOutcome {
    let mut outcome = TrialOutcome {
        seed: setup.seed,
        snr_db: setup.snr_db,
        snapshots: setup.snapshots,
        truths: setup.angles.to_vec(),
        estimates: Vec::new(),
        errors: Vec::new(),
        resolved: false,
        rmse_deg: None,
        failure: None,
    };
    let model = CouplingModel::default();
    let result = SourceScene::bpsk(setup.angles.to_vec(), setup.seed)
        .and_then(|scene| {
            simulate(
                setup.array,
                &scene,
                setup.snr_db,
                setup.snapshots,
                setup.coupling.then_some(&model),
            )
        })
        .and_then(|x| {
            estimate_doa(
                &x,
                setup.coarray.cases(),
                setup.angles.len(),
                setup.grid_step,
            )
        })
        .and_then(|est| {
            let pairs = match_to_truth(&est.angles_deg, setup.angles)?;
            Ok((est, pairs))
        });
    match result {
        Ok((est, pairs)) => {
            outcome.resolved = est.resolved();
            outcome.errors = pairs.iter().map(|(e, t)| e - t).collect();
            outcome.rmse_deg = rmse(&[pairs]).ok();
            outcome.estimates = est.angles_deg;
        }
        Err(e) => outcome.failure = Some(e.to_string()),
    }
    outcome
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `trials` seeded trials at one operating point; trial `t` uses `seed + t`.
#[allow(clippy::too_many_arguments)]
pub fn run_point(
    array: &SensorArray,
    angles: &[f64],
    snr_db: f64,
    snapshots: usize,
    cfg: &ExperimentConfig,
    seed: u64,
    jobs: usize,
) -> CliResult<Vec<TrialOutcome>> {
    with_pool(jobs, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(&TrialSetup {
                    array,
                    angles,
                    snr_db,
                    snapshots,
                    seed: seed.wrapping_add(t as u64),
                    grid_step: cfg.grid_step,
                    coupling: cfg.coupling,
                    coarray: cfg.coarray,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolveReport {
    pub seed: u64,
    pub sensors: usize,
    pub positions: Vec<i64>,
    pub tolerance: f64,
    pub successes: usize,
    pub trials: Vec<TrialOutcome>,
}

impl ResolveReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.len() as f64
    }
}

/// Per-trial CSV row for `resolve`.
#[derive(Debug, Clone, Serialize)]
pub struct ResolveRow {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub resolved: bool,
    pub max_abs_error_deg: Option<f64>,
    pub estimates_deg: String,
    pub failure: Option<String>,
}

impl ResolveReport {
    pub fn rows(&self) -> Vec<ResolveRow> {
        self.trials
            .iter()
            .enumerate()
            .map(|(i, t)| ResolveRow {
                trial: i,
                seed: t.seed,
                success: t.within(self.tolerance),
                resolved: t.resolved,
                max_abs_error_deg: t.max_abs_error(),
                estimates_deg: t
                    .estimates
                    .iter()
                    .map(|e| format!("{e:.4}"))
                    .collect::<Vec<_>>()
                    .join(";"),
                failure: t.failure.clone(),
            })
            .collect()
    }
}

pub fn resolve(cfg: &ExperimentConfig, jobs: usize) -> CliResult<ResolveReport> {
    let seed = cfg.validate()?;
    let single = |name: &str, len: usize| {
        if len == 1 {
            Ok(())
        } else {
            Err(CliError::Config {
                origin: "config".into(),
                message: format!("resolve takes a single `{name}` value, got {len}"),
            })
        }
    };
    single("snr_db", cfg.snr_db.len())?;
    single("snapshots", cfg.snapshots.len())?;
    let array = fogna_array(cfg.sensors)?;
    let angles = cfg.source_angles();
    let trials = run_point(
        &array,
        &angles,
        cfg.snr_db[0],
        cfg.snapshots[0],
        cfg,
        seed,
        jobs,
    )?;
    let successes = trials.iter().filter(|t| t.within(cfg.tolerance)).count();
    Ok(ResolveReport {
        seed,
        sensors: cfg.sensors,
        positions: array.positions().to_vec(),
        tolerance: cfg.tolerance,
        successes,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsePoint {
    pub snr_db: f64,
    pub snapshots: usize,
    pub trials: usize,
    pub seed: u64,
    pub median_rmse_deg: Option<f64>,
    pub mean_rmse_deg: Option<f64>,
    pub pooled_rmse_deg: Option<f64>,
    pub unresolved: usize,
    pub failures: usize,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

pub fn summarize(snr_db: f64, snapshots: usize, seed: u64, trials: &[TrialOutcome]) -> RmsePoint {
    let per_trial: Vec<f64> = trials.iter().filter_map(|t| t.rmse_deg).collect();
    let pooled: Vec<Vec<(f64, f64)>> = trials
        .iter()
        .filter(|t| t.failure.is_none())
        .map(|t| t.errors.iter().map(|&e| (e, 0.0)).collect())
        .collect();
    RmsePoint {
        snr_db,
        snapshots,
        trials: trials.len(),
        seed,
        mean_rmse_deg: (!per_trial.is_empty())
            .then(|| per_trial.iter().sum::<f64>() / per_trial.len() as f64),
        median_rmse_deg: median(per_trial),
        pooled_rmse_deg: rmse(&pooled).ok(),
        unresolved: trials.iter().filter(|t| !t.resolved).count(),
        failures: trials.iter().filter(|t| t.failure.is_some()).count(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseReport {
    pub seed: u64,
    pub points: Vec<RmsePoint>,
    pub trials: Vec<TrialOutcome>,
}

/// Sweeps every `(snr_db, snapshots)` pair. All points reuse the same trial
/// seeds, so sweeps compare common random draws.
pub fn rmse_sweep(cfg: &ExperimentConfig, jobs: usize) -> CliResult<RmseReport> {
    let seed = cfg.validate()?;
    let array = fogna_array(cfg.sensors)?;
    let angles = cfg.source_angles();
    let mut points = Vec::new();
    let mut all = Vec::new();
    for &k in &cfg.snapshots {
        for &snr in &cfg.snr_db {
            let trials = run_point(&array, &angles, snr, k, cfg, seed, jobs)?;
            points.push(summarize(snr, k, seed, &trials));
            all.extend(trials);
        }
    }
    Ok(RmseReport {
        seed,
        points,
        trials: all,
    })
}
