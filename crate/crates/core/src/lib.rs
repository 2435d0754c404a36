//! Hybrid indoor localization from UWB time-of-arrival ranges and inertial
//! dead reckoning, fused with a constant-gain Kalman filter.
//!
//! The pipeline has three stages per inertial tick:
//!
//! 1. dead reckoning turns body-frame accelerations and yaw rate into a
//!    displacement in the global frame ([`imu`]);
//! 2. each UWB epoch's ranges are combined into a Min-Max fix
//!    ([`localization`]);
//! 3. a steady-state filter with an offline gain adds the displacement and
//!    pulls the position towards the fix ([`fusion`]).
//!
//! [`scenario`] and [`montecarlo`] provide the synthetic evaluation harness
//! and [`io`] the CSV dataset format.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod epoch;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod imu;
pub mod io;
pub mod localization;
pub mod model;
pub mod montecarlo;
pub mod scenario;
pub mod seed;

pub use channel::{ChannelParams, ChannelRealization, MultipathTap, SPEED_OF_LIGHT};
pub use epoch::{bucket_epochs, Epoch};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport};
pub use fusion::{
    compute_steady_state_gain, run_fusion, Estimator, FilterConfig, FilterGain, FilterState, FusionMode, FusionOutput,
};
pub use imu::{dead_reckon, AccelNoise, ImuNoiseModel};
pub use localization::{min_max, multilateration_ls, BoundingBox};
pub use model::{Anchor, ImuSample, KinematicState, RangeMeasurement, TimedPose, Trajectory};
pub use montecarlo::{run_monte_carlo, MonteCarloOptions, MonteCarloRow, MonteCarloTable};
pub use scenario::ScenarioSpec;
