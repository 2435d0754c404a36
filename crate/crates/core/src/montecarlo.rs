//! Seeded Monte-Carlo batches over a scenario.
//!
//! Ground truth is generated once; each run draws fresh inertial and radio
//! noise from `mix_seed([spec.seed, run])`. Per-run results are stored by
//! run index and aggregated in index order, so serial and parallel
//! execution produce the same numbers bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::fusion::{compute_steady_state_gain, run_fusion, Estimator, FilterConfig, FilterGain, FusionMode};
use crate::imu::initial_state_from_truth;
use crate::model::Trajectory;
use crate::scenario::ScenarioSpec;
use crate::seed::mix_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub n_runs: usize,
    pub modes: Vec<FusionMode>,
    /// Noise variances; calibrated from the scenario when absent.
    pub filter: Option<FilterConfig>,
    /// Overrides the steady-state gain derived from `filter`.
    pub gain: Option<FilterGain>,
    pub epoch_tolerance: f64,
    /// Worker threads; 1 runs serially on the calling thread, 0 uses the
    /// global rayon pool.
    pub threads: usize,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            n_runs: 20,
            modes: vec![FusionMode::UwbOnly, FusionMode::ImuOnly, FusionMode::SteadyState],
            filter: None,
            gain: None,
            epoch_tolerance: 0.1,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub rmse: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub mode: FusionMode,
    pub mean_rmse: f64,
    /// Sample standard deviation over runs (0 for a single run).
    pub std_rmse: f64,
    pub mean_max_error: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloTable {
    pub rows: Vec<MonteCarloRow>,
    pub filter: FilterConfig,
    pub gain: FilterGain,
    /// `runs[i][m]` is run `i` under `rows[m].mode`.
    pub runs: Vec<Vec<RunResult>>,
}

impl MonteCarloTable {
    pub fn row(&self, mode: FusionMode) -> Option<&MonteCarloRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }
}

/// Runs every mode on one seeded realization of the scenario sensors.
pub fn run_once(
    spec: &ScenarioSpec,
    truth: &Trajectory,
    estimators: &[Estimator],
    run_seed: u64,
    epoch_tolerance: f64,
) -> Result<Vec<RunResult>> {
    let data = spec.simulate(truth, run_seed)?;
    let initial = initial_state_from_truth(truth)?;
    estimators
        .iter()
        .map(|est| {
            let out = run_fusion(&initial, &data.imu, &data.ranges, &spec.anchors, est, epoch_tolerance)?;
            let report = evaluate(&out.trajectory, truth)?;
            Ok(RunResult {
                rmse: report.rmse,
                max_error: report.max_error,
            })
        })
        .collect()
}

/// Aggregates per-run results for each mode, in run order.
pub fn aggregate(modes: &[FusionMode], runs: &[Vec<RunResult>]) -> Vec<MonteCarloRow> {
    let n = runs.len();
    modes
        .iter()
        .enumerate()
        .map(|(m, &mode)| {
            let rmse: Vec<f64> = runs.iter().map(|r| r[m].rmse).collect();
            let mean = rmse.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                rmse.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            MonteCarloRow {
                mode,
                mean_rmse: mean,
                std_rmse: var.sqrt(),
                mean_max_error: runs.iter().map(|r| r[m].max_error).sum::<f64>() / n as f64,
                n_runs: n,
            }
        })
        .collect()
}

pub fn run_monte_carlo(spec: &ScenarioSpec, opts: &MonteCarloOptions) -> Result<MonteCarloTable> {
    if opts.n_runs == 0 {
        return Err(Error::Config("Monte-Carlo needs at least one run".into()));
    }
    if opts.modes.is_empty() {
        return Err(Error::Config("no modes selected".into()));
    }
    let truth = spec.generate_path()?;
    let filter = match opts.filter {
        Some(f) => f,
        None => spec.calibrate(&truth, opts.epoch_tolerance)?,
    };
    let gain = match opts.gain {
        Some(g) => g,
        None => compute_steady_state_gain(&filter)?,
    };
    let estimators = opts
        .modes
        .iter()
        .map(|&m| Estimator::for_mode(m, &filter, Some(gain)))
        .collect::<Result<Vec<_>>>()?;

    let one = |i: usize| {
        run_once(
            spec,
            &truth,
            &estimators,
            mix_seed(&[spec.seed, i as u64]),
            opts.epoch_tolerance,
        )
    };
    let runs: Vec<Vec<RunResult>> = match opts.threads {
        1 => (0..opts.n_runs).map(one).collect::<Result<_>>()?,
        0 => (0..opts.n_runs).into_par_iter().map(one).collect::<Result<_>>()?,
        t => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?
            .install(|| (0..opts.n_runs).into_par_iter().map(one).collect::<Result<_>>())?,
    };

    Ok(MonteCarloTable {
        rows: aggregate(&opts.modes, &runs),
        filter,
        gain,
        runs,
    })
}
