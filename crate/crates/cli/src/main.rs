mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybridloc_core::imu::initial_state_from_truth;
use hybridloc_core::io::{self, ingest, Dataset};
use hybridloc_core::seed::mix_seed;
use hybridloc_core::{
    compute_steady_state_gain, evaluate, run_fusion, run_monte_carlo, Error, Estimator, EvalReport, FilterConfig,
    FilterGain, FusionMode, KinematicState, MonteCarloOptions, Result, Trajectory,
};

use config::{DatasetPaths, RunConfig};

#[derive(Parser)]
#[command(
    name = "hybridloc",
    version,
    about = "UWB and inertial fusion for indoor localization"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the steady-state gain for process noise q and fix noise r.
    Gain {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
    },
    /// Write a synthetic dataset (anchors, imu, uwb, truth CSV) for a scenario.
    Simulate {
        /// Monte-Carlo run index whose noise realization is written.
        #[arg(long, default_value_t = 0)]
        run: u64,
    },
    /// Run fusion on a dataset or a simulated scenario.
    Fuse {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Compare estimates.csv against truth.csv.
    Eval {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Seeded batch over a scenario; writes summary.csv and summary.json.
    Montecarlo {
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        filter: FilterArgs,
        /// Worker threads; 1 runs serially, 0 uses every core.
        #[arg(long, visible_alias = "jobs")]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, requires_all = ["imu", "uwb"])]
    anchors: Option<PathBuf>,
    #[arg(long)]
    imu: Option<PathBuf>,
    #[arg(long)]
    uwb: Option<PathBuf>,
    /// Ground truth; pass an empty string to skip evaluation.
    #[arg(long)]
    truth: Option<String>,
}

#[derive(Args)]
struct FilterArgs {
    /// Comma-separated: steady_state, classical, imu_only, uwb_only.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<FusionMode>>,
    #[arg(long, requires = "r", allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, requires = "q", allow_negative_numbers = true)]
    r: Option<f64>,
    /// Steady-state gain used on both axes; overrides q and r.
    #[arg(long, allow_negative_numbers = true)]
    gain: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    epoch_tolerance: Option<f64>,
}

impl FilterArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(m) = &self.modes {
            cfg.modes = Some(m.clone());
        }
        if let (Some(q), Some(r)) = (self.q, self.r) {
            cfg.filter = Some(FilterConfig::new(q, r, cfg.filter.map_or(0.0, |f| f.p0)));
        }
        if let Some(k) = self.gain {
            cfg.gain = Some(FilterGain::uniform(k)?);
        }
        if let Some(t) = self.epoch_tolerance {
            cfg.epoch_tolerance = Some(t);
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    match cli.command {
        Command::Gain { q, r } => {
            let g = compute_steady_state_gain(&FilterConfig::new(q, r, 0.0))?;
            println!("kx={:.9} ky={:.9}", g.kx, g.ky);
            Ok(())
        }
        Command::Simulate { run } => {
            cfg.validate()?;
            simulate(&cfg, run)
        }
        Command::Fuse { data, filter } => {
            filter.apply(&mut cfg)?;
            if let (Some(anchors), Some(imu), Some(uwb)) = (data.anchors, data.imu, data.uwb) {
                cfg.scenario = None;
                cfg.dataset = Some(DatasetPaths {
                    anchors,
                    imu,
                    uwb,
                    truth: data.truth.map(PathBuf::from),
                });
            } else if let (Some(ds), Some(t)) = (cfg.dataset.as_mut(), data.truth) {
                ds.truth = Some(PathBuf::from(t));
            }
            cfg.validate()?;
            fuse(&cfg)
        }
        Command::Eval { estimates, truth } => {
            cfg.validate()?;
            eval(&estimates, &truth, &cfg.out_dir())
        }
        Command::Montecarlo { runs, filter, threads } => {
            filter.apply(&mut cfg)?;
            if runs.is_some() {
                cfg.runs = runs;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            cfg.validate()?;
            montecarlo(&cfg)
        }
    }
}

fn simulate(cfg: &RunConfig, run: u64) -> Result<()> {
    let spec = cfg.scenario()?;
    let truth = spec.generate_path()?;
    let data = spec.simulate(&truth, mix_seed(&[spec.seed, run]))?;
    let out = cfg.out_dir();
    create_dir(&out)?;
    io::write_anchors(&out.join("anchors.csv"), &spec.anchors)?;
    io::write_imu(&out.join("imu.csv"), &data.imu)?;
    io::write_ranges(&out.join("uwb.csv"), &data.ranges)?;
    io::write_truth(&out.join("truth.csv"), &truth)?;
    eprintln!(
        "wrote {} imu samples, {} ranges, {} truth poses to {}",
        data.imu.len(),
        data.ranges.len(),
        truth.len(),
        out.display()
    );
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Filter variances and gain for the requested modes. Scenario runs fall
/// back to calibration; datasets need explicit values.
fn resolve_filter(
    cfg: &RunConfig,
    modes: &[FusionMode],
    calibrate: impl FnOnce() -> Result<FilterConfig>,
) -> Result<(FilterConfig, Option<FilterGain>)> {
    let needs_q_r = modes.contains(&FusionMode::Classical);
    let needs_gain = modes.contains(&FusionMode::SteadyState);
    let filter = match cfg.filter {
        Some(f) => Some(f),
        None if needs_q_r || (needs_gain && cfg.gain.is_none()) => Some(calibrate()?),
        None => None,
    };
    let gain = match (cfg.gain, filter) {
        (Some(g), _) => Some(g),
        (None, Some(f)) if needs_gain => Some(compute_steady_state_gain(&f)?),
        _ => None,
    };
    // Modes that ignore the filter still need a valid placeholder.
    Ok((filter.unwrap_or(FilterConfig::new(1.0, 1.0, 0.0)), gain))
}

fn default_modes(cfg: &RunConfig) -> Vec<FusionMode> {
    cfg.modes
        .clone()
        .unwrap_or_else(|| vec![FusionMode::UwbOnly, FusionMode::ImuOnly, FusionMode::SteadyState])
}

fn fuse(cfg: &RunConfig) -> Result<()> {
    let modes = default_modes(cfg);
    if modes.is_empty() {
        return Err(Error::Config("no modes selected".into()));
    }
    let tol = cfg.epoch_tolerance();
    let (data, calibrate): (Dataset, Box<dyn FnOnce() -> Result<FilterConfig>>) = match &cfg.dataset {
        Some(ds) => (
            ingest(&ds.anchors, &ds.imu, &ds.uwb, ds.truth.as_deref())?,
            Box::new(|| {
                Err(Error::Config(
                    "dataset runs need `filter` (q, r) or `gain` for the selected modes".into(),
                ))
            }),
        ),
        None => {
            let spec = cfg.scenario()?;
            let truth = spec.generate_path()?;
            let sensors = spec.simulate(&truth, mix_seed(&[spec.seed, 0]))?;
            let data = Dataset {
                anchors: spec.anchors.clone(),
                imu: sensors.imu,
                ranges: sensors.ranges,
                truth: Some(truth.clone()),
            };
            (data, Box::new(move || spec.calibrate(&truth, tol)))
        }
    };
    let (filter, gain) = resolve_filter(cfg, &modes, calibrate)?;
    // Min-Max fixes alone never read the starting pose.
    let initial = if modes.iter().all(|&m| m == FusionMode::UwbOnly) {
        KinematicState::default()
    } else {
        initial_state(cfg, data.truth.as_ref())?
    };

    let mut results: Vec<(FusionMode, Trajectory, Option<EvalReport>)> = Vec::new();
    for &mode in &modes {
        let est = Estimator::for_mode(mode, &filter, gain)?;
        let out = run_fusion(&initial, &data.imu, &data.ranges, &data.anchors, &est, tol)?;
        let report = data.truth.as_ref().map(|t| evaluate(&out.trajectory, t)).transpose()?;
        let d = out.diagnostics;
        match &report {
            Some(r) => eprintln!(
                "{mode}: rmse {:.3} m, max {:.3} m ({} epochs applied, {} skipped)",
                r.rmse, r.max_error, d.epochs_applied, d.epochs_skipped
            ),
            None => eprintln!(
                "{mode}: {} poses ({} epochs applied)",
                out.trajectory.len(),
                d.epochs_applied
            ),
        }
        results.push((mode, out.trajectory, report));
    }
    let runs: Vec<_> = results.iter().map(|(m, t, r)| (*m, t, r.as_ref())).collect();
    io::emit(&cfg.out_dir(), &runs)
}

fn initial_state(cfg: &RunConfig, truth: Option<&Trajectory>) -> Result<KinematicState> {
    match (cfg.initial_state, truth) {
        (Some(s), _) if s.is_finite() => Ok(s),
        (Some(_), _) => Err(Error::Config("initial_state must be finite".into())),
        (None, Some(t)) => initial_state_from_truth(t),
        (None, None) => Err(Error::Config(
            "without truth the configuration must give initial_state".into(),
        )),
    }
}

fn eval(estimates: &Path, truth: &Path, out: &Path) -> Result<()> {
    let est = io::read_estimates(estimates)?;
    let truth = io::read_truth(truth)?;
    if est.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no rows", estimates.display())));
    }
    let reports = est
        .iter()
        .map(|(mode, traj)| Ok((mode.clone(), evaluate(traj, &truth)?)))
        .collect::<Result<Vec<_>>>()?;
    for (mode, r) in &reports {
        println!(
            "{mode}: rmse {:.6} m, max {:.6} m, n {}",
            r.rmse, r.max_error, r.n_samples
        );
    }
    create_dir(out)?;
    let refs: Vec<(String, &EvalReport)> = reports.iter().map(|(m, r)| (m.clone(), r)).collect();
    io::write_errors(&out.join("errors.csv"), &refs)?;
    io::write_report_json(&out.join("report.json"), &refs)
}

fn montecarlo(cfg: &RunConfig) -> Result<()> {
    if cfg.dataset.is_some() {
        return Err(Error::Config("montecarlo needs a scenario, not a dataset".into()));
    }
    let spec = cfg.scenario()?;
    let defaults = MonteCarloOptions::default();
    let opts = MonteCarloOptions {
        n_runs: cfg.runs.unwrap_or(defaults.n_runs),
        modes: cfg.modes.clone().unwrap_or(defaults.modes),
        filter: cfg.filter,
        gain: cfg.gain,
        epoch_tolerance: cfg.epoch_tolerance(),
        threads: cfg.threads.unwrap_or(defaults.threads),
    };
    let table = run_monte_carlo(&spec, &opts)?;
    for row in &table.rows {
        println!(
            "{:<13} mean rmse {:.3} m  std {:.3} m  mean max {:.3} m",
            row.mode.as_str(),
            row.mean_rmse,
            row.std_rmse,
            row.mean_max_error
        );
    }
    io::write_summary(&cfg.out_dir(), &table, spec.seed)
}
