//! Constant-gain position filter fusing dead reckoning with Min-Max fixes.
//!
//! The filter state is just the planar position. Dead reckoning supplies the
//! dynamics as a displacement per inertial tick and each UWB epoch corrects
//! the position towards its Min-Max fix with a gain fixed offline. The
//! time-varying ("classical") Kalman filter over the same identity model is
//! kept alongside for comparison.

use serde::{Deserialize, Serialize};

use crate::epoch::{bucket_epochs, Epoch};
use crate::error::{Error, Result};
use crate::imu::dead_reckon_step;
use crate::localization::min_max;
use crate::model::{check_increasing, Anchor, ImuSample, KinematicState, RangeMeasurement, TimedPose, Trajectory};

const RICCATI_TOL: f64 = 1e-9;
const RICCATI_MAX_ITER: usize = 10_000;

/// Per-axis noise variances shared by both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Process noise variance per prediction step, m².
    pub q: f64,
    /// Variance of a UWB position fix, m².
    pub r: f64,
    /// Initial covariance (time-varying filter only), m².
    #[serde(default)]
    pub p0: f64,
}

impl FilterConfig {
    pub fn new(q: f64, r: f64, p0: f64) -> Self {
        Self { q, r, p0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.q.is_finite()) || !(self.p0 >= 0.0 && self.p0.is_finite()) {
            return Err(Error::Config(format!(
                "filter needs q >= 0 and p0 >= 0, got q={}, p0={}",
                self.q, self.p0
            )));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Config(format!("filter needs r > 0, got {}", self.r)));
        }
        Ok(())
    }
}

/// Constant per-axis gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterGain {
    pub kx: f64,
    pub ky: f64,
}

impl FilterGain {
    pub fn new(kx: f64, ky: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kx) || !(0.0..=1.0).contains(&ky) {
            return Err(Error::Config(format!(
                "gain components must lie in [0, 1], got ({kx}, {ky})"
            )));
        }
        Ok(Self { kx, ky })
    }

    pub fn uniform(k: f64) -> Result<Self> {
        Self::new(k, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterState {
    pub x: f64,
    pub y: f64,
    /// Per-axis covariance; unused by the constant-gain filter.
    pub p: f64,
}

impl FilterState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, p: 0.0 }
    }
}

/// Fixed point of the scalar Riccati recursion for one axis.
fn riccati_fixed_point(q: f64, r: f64) -> Result<f64> {
    let mut p = 0.0;
    let mut k = 0.0;
    for _ in 0..RICCATI_MAX_ITER {
        let prior = p + q;
        k = prior / (prior + r);
        let next = (1.0 - k) * prior;
        let delta = (next - p).abs();
        p = next;
        if delta < RICCATI_TOL {
            return Ok(k);
        }
    }
    Err(Error::Numerical(format!(
        "Riccati recursion did not converge in {RICCATI_MAX_ITER} iterations (q={q}, r={r}, last K={k})"
    )))
}

/// Steady-state gain of the identity-dynamics, identity-observation filter.
pub fn compute_steady_state_gain(cfg: &FilterConfig) -> Result<FilterGain> {
    cfg.validate()?;
    let k = riccati_fixed_point(cfg.q, cfg.r)?;
    Ok(FilterGain { kx: k, ky: k })
}

pub fn sskf_predict(state: &FilterState, displacement: [f64; 2]) -> FilterState {
    FilterState {
        x: state.x + displacement[0],
        y: state.y + displacement[1],
        p: state.p,
    }
}

pub fn sskf_update(state: &FilterState, fix: [f64; 2], gain: &FilterGain) -> FilterState {
    FilterState {
        x: state.x + gain.kx * (fix[0] - state.x),
        y: state.y + gain.ky * (fix[1] - state.y),
        p: state.p,
    }
}

fn classical_update(state: &FilterState, fix: [f64; 2], r: f64) -> FilterState {
    let k = state.p / (state.p + r);
    FilterState {
        x: state.x + k * (fix[0] - state.x),
        y: state.y + k * (fix[1] - state.y),
        p: (1.0 - k) * state.p,
    }
}

/// One predict (and, with a fix, update) cycle of the time-varying filter.
pub fn classical_kf_step(
    state: &FilterState,
    displacement: [f64; 2],
    fix: Option<[f64; 2]>,
    cfg: &FilterConfig,
) -> FilterState {
    let mut s = sskf_predict(state, displacement);
    s.p += cfg.q;
    match fix {
        Some(f) => classical_update(&s, f, cfg.r),
        None => s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    SteadyState,
    Classical,
    ImuOnly,
    UwbOnly,
}

impl FusionMode {
    pub const ALL: [FusionMode; 4] = [
        FusionMode::UwbOnly,
        FusionMode::ImuOnly,
        FusionMode::SteadyState,
        FusionMode::Classical,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMode::SteadyState => "steady_state",
            FusionMode::Classical => "classical",
            FusionMode::ImuOnly => "imu_only",
            FusionMode::UwbOnly => "uwb_only",
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// What the fusion loop runs. The constant-gain variant carries only the
/// gain, so it cannot read `q` or `p0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    SteadyState(FilterGain),
    Classical(FilterConfig),
    ImuOnly,
    UwbOnly,
}

impl Estimator {
    pub fn mode(&self) -> FusionMode {
        match self {
            Estimator::SteadyState(_) => FusionMode::SteadyState,
            Estimator::Classical(_) => FusionMode::Classical,
            Estimator::ImuOnly => FusionMode::ImuOnly,
            Estimator::UwbOnly => FusionMode::UwbOnly,
        }
    }

    /// Builds the estimator for `mode`; the constant gain is derived from
    /// `cfg` unless given explicitly.
    pub fn for_mode(mode: FusionMode, cfg: &FilterConfig, gain: Option<FilterGain>) -> Result<Self> {
        Ok(match mode {
            FusionMode::SteadyState => match gain {
                Some(g) => Estimator::SteadyState(g),
                None => Estimator::SteadyState(compute_steady_state_gain(cfg)?),
            },
            FusionMode::Classical => {
                cfg.validate()?;
                Estimator::Classical(*cfg)
            }
            FusionMode::ImuOnly => Estimator::ImuOnly,
            FusionMode::UwbOnly => Estimator::UwbOnly,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FusionDiagnostics {
    pub epochs_applied: usize,
    /// Epochs with no range from a known anchor.
    pub epochs_skipped: usize,
    /// Epochs later than the last inertial tick.
    pub epochs_unapplied: usize,
}

#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub trajectory: Trajectory,
    pub diagnostics: FusionDiagnostics,
}

/// Min-Max fix for one epoch, ignoring ranges from unknown anchors.
pub fn epoch_fix(epoch: &Epoch, anchors: &[Anchor]) -> Option<[f64; 2]> {
    let pairs: Vec<(Anchor, f64)> = epoch
        .ranges
        .iter()
        .filter_map(|r| anchors.iter().find(|a| a.id == r.anchor_id).map(|a| (*a, r.distance)))
        .collect();
    min_max(&pairs).ok()
}

/// Tolerance when matching an epoch time to an inertial tick.
const TICK_EPS: f64 = 1e-9;

/// Runs one estimator over an inertial stream and UWB ranges.
///
/// Every inertial tick predicts with the dead-reckoned displacement; each
/// UWB epoch is applied, after the prediction, at the first tick whose time
/// is not earlier than the epoch. The dead-reckoning velocity and heading are
/// never corrected.
pub fn run_fusion(
    initial: &KinematicState,
    imu: &[ImuSample],
    uwb: &[RangeMeasurement],
    anchors: &[Anchor],
    estimator: &Estimator,
    epoch_tolerance: f64,
) -> Result<FusionOutput> {
    check_increasing(imu.iter().map(|s| s.t))?;
    let epochs = bucket_epochs(uwb, epoch_tolerance);
    let mut diag = FusionDiagnostics::default();

    if let Estimator::UwbOnly = estimator {
        let mut traj = Trajectory::default();
        for e in &epochs {
            match epoch_fix(e, anchors) {
                Some([x, y]) => {
                    traj.push(TimedPose::new(e.t, x, y, 0.0))?;
                    diag.epochs_applied += 1;
                }
                None => diag.epochs_skipped += 1,
            }
        }
        return Ok(FusionOutput {
            trajectory: traj,
            diagnostics: diag,
        });
    }

    let Some(first) = imu.first() else {
        return Ok(FusionOutput {
            trajectory: Trajectory::new(vec![initial.pose(0.0)])?,
            diagnostics: FusionDiagnostics {
                epochs_unapplied: epochs.len(),
                ..diag
            },
        });
    };

    let mut dr = *initial;
    let mut state = FilterState {
        x: initial.x,
        y: initial.y,
        p: match estimator {
            Estimator::Classical(cfg) => cfg.p0,
            _ => 0.0,
        },
    };
    let mut next_epoch = 0;
    let mut poses = Vec::with_capacity(imu.len());

    let mut apply_due = |t: f64, state: &mut FilterState, diag: &mut FusionDiagnostics| {
        while next_epoch < epochs.len() && epochs[next_epoch].t <= t + TICK_EPS {
            let e = &epochs[next_epoch];
            next_epoch += 1;
            let Some(fix) = epoch_fix(e, anchors) else {
                diag.epochs_skipped += 1;
                continue;
            };
            *state = match estimator {
                Estimator::SteadyState(g) => sskf_update(state, fix, g),
                Estimator::Classical(cfg) => classical_update(state, fix, cfg.r),
                _ => *state,
            };
            diag.epochs_applied += 1;
        }
    };

    if !matches!(estimator, Estimator::ImuOnly) {
        apply_due(first.t, &mut state, &mut diag);
    }
    poses.push(TimedPose::new(first.t, state.x, state.y, dr.theta));

    for w in imu.windows(2) {
        let next = dead_reckon_step(&dr, &w[0], w[1].t - w[0].t)?;
        let displacement = [next.x - dr.x, next.y - dr.y];
        dr = next;
        state = match estimator {
            Estimator::Classical(cfg) => classical_kf_step(&state, displacement, None, cfg),
            _ => sskf_predict(&state, displacement),
        };
        if !matches!(estimator, Estimator::ImuOnly) {
            apply_due(w[1].t, &mut state, &mut diag);
        }
        poses.push(TimedPose::new(w[1].t, state.x, state.y, dr.theta));
    }
    if !matches!(estimator, Estimator::ImuOnly) {
        diag.epochs_unapplied = epochs.len() - next_epoch;
    }

    Ok(FusionOutput {
        trajectory: Trajectory::new(poses)?,
        diagnostics: diag,
    })
}
