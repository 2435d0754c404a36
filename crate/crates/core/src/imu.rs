//! Inertial unit simulation and planar dead reckoning.
//!
//! Dead reckoning holds each sample constant until the next one arrives: the
//! body acceleration is rotated into the global frame with the heading held
//! before the step, then integrated twice, and the yaw rate is integrated
//! once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_angle, ImuSample, KinematicState, Trajectory};

/// Additive accelerometer noise, given either relative to the signal or as
/// an absolute standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelNoise {
    /// Ratio of mean-square true body acceleration (both axes together) to
    /// noise power, in decibels.
    SnrDb(f64),
    /// Per-axis standard deviation in m/s².
    Std(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuNoiseModel {
    pub accel: AccelNoise,
    /// Std of a per-run constant accelerometer offset (per axis), m/s².
    #[serde(default)]
    pub accel_bias_std: f64,
    /// Constant gyro offset, rad/s.
    #[serde(default)]
    pub gyro_bias: f64,
    #[serde(default)]
    pub gyro_noise_std: f64,
}

impl ImuNoiseModel {
    pub fn noiseless() -> Self {
        Self {
            accel: AccelNoise::Std(0.0),
            accel_bias_std: 0.0,
            gyro_bias: 0.0,
            gyro_noise_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stds = [self.accel_bias_std, self.gyro_noise_std];
        if stds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || !self.gyro_bias.is_finite() {
            return Err(Error::Config(
                "noise standard deviations must be finite and non-negative".into(),
            ));
        }
        match self.accel {
            AccelNoise::Std(s) if !(s.is_finite() && s >= 0.0) => Err(Error::Config(format!(
                "accelerometer noise std must be non-negative, got {s}"
            ))),
            AccelNoise::SnrDb(db) if !db.is_finite() => {
                Err(Error::Config(format!("accelerometer SNR must be finite, got {db}")))
            }
            _ => Ok(()),
        }
    }
}

/// Projects a body-frame planar vector into the global frame for heading `phi`.
pub fn rotate_body_to_global(u_body: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * u_body[0] - s * u_body[1], s * u_body[0] + c * u_body[1]]
}

/// Advances `state` by `dt` seconds using `sample` as a zero-order hold.
pub fn dead_reckon_step(state: &KinematicState, sample: &ImuSample, dt: f64) -> Result<KinematicState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let [ax, ay] = rotate_body_to_global([sample.ax_body, sample.ay_body], state.theta);
    Ok(KinematicState {
        x: state.x + state.vx * dt + 0.5 * ax * dt * dt,
        y: state.y + state.vy * dt + 0.5 * ay * dt * dt,
        vx: state.vx + ax * dt,
        vy: state.vy + ay * dt,
        ax,
        ay,
        theta: normalize_angle(state.theta + sample.omega_z * dt),
        omega: sample.omega_z,
    })
}

/// Dead-reckoned states, one per sample; the first is `initial` at the
/// first sample time.
pub fn dead_reckon_states(initial: &KinematicState, samples: &[ImuSample]) -> Result<Vec<KinematicState>> {
    crate::model::check_increasing(samples.iter().map(|s| s.t))?;
    let mut states = Vec::with_capacity(samples.len().max(1));
    states.push(*initial);
    for w in samples.windows(2) {
        let prev = states[states.len() - 1];
        states.push(dead_reckon_step(&prev, &w[0], w[1].t - w[0].t)?);
    }
    Ok(states)
}

/// Integrates a sample stream from `initial` into a trajectory with one pose
/// per sample. An empty stream yields the initial pose at t = 0.
pub fn dead_reckon(initial: &KinematicState, samples: &[ImuSample]) -> Result<Trajectory> {
    let states = dead_reckon_states(initial, samples)?;
    let poses = if samples.is_empty() {
        vec![initial.pose(0.0)]
    } else {
        states.iter().zip(samples).map(|(s, sample)| s.pose(sample.t)).collect()
    };
    Trajectory::new(poses)
}

/// Position error grown from a constant acceleration error `noise_std`
/// after `t` seconds: `N·t²/2`.
pub fn drift_bound(noise_std: f64, t: f64) -> Result<f64> {
    if t < 0.0 || noise_std < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "drift bound needs t >= 0 and N >= 0, got t={t}, N={noise_std}"
        )));
    }
    Ok(noise_std * t * t / 2.0)
}

/// Exact derivatives of a densely sampled trajectory.
#[derive(Debug, Clone)]
pub struct TruthDerivatives {
    pub velocity: Vec<[f64; 2]>,
    pub accel_body: Vec<[f64; 2]>,
    pub omega: Vec<f64>,
}

fn central_diff<const N: usize>(t: &[f64], y: &[[f64; N]]) -> Vec<[f64; N]> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            let dt = t[b] - t[a];
            std::array::from_fn(|k| (y[b][k] - y[a][k]) / dt)
        })
        .collect()
}

/// Velocity, body-frame acceleration and yaw rate of `truth` by central
/// differences (one-sided at the ends).
pub fn differentiate_truth(truth: &Trajectory) -> Result<TruthDerivatives> {
    if truth.len() < 3 {
        return Err(Error::EmptyInput(format!(
            "truth needs at least 3 samples to difference twice, got {}",
            truth.len()
        )));
    }
    let poses = truth.poses();
    let t: Vec<f64> = poses.iter().map(|p| p.t).collect();
    let pos: Vec<[f64; 2]> = poses.iter().map(|p| [p.x, p.y]).collect();
    let mut unwrapped = Vec::with_capacity(poses.len());
    let mut acc = poses[0].theta;
    unwrapped.push([acc]);
    for w in poses.windows(2) {
        acc += normalize_angle(w[1].theta - w[0].theta);
        unwrapped.push([acc]);
    }
    let velocity = central_diff(&t, &pos);
    let accel = central_diff(&t, &velocity);
    let omega = central_diff(&t, &unwrapped).into_iter().map(|[w]| w).collect();
    let accel_body = accel
        .iter()
        .zip(poses)
        .map(|(a, p)| rotate_body_to_global(*a, -p.theta))
        .collect();
    Ok(TruthDerivatives {
        velocity,
        accel_body,
        omega,
    })
}

/// Kinematic state at the first truth sample, with a forward-difference
/// velocity.
pub fn initial_state_from_truth(truth: &Trajectory) -> Result<KinematicState> {
    let p = truth.poses();
    match p {
        [] => Err(Error::EmptyInput("truth trajectory is empty".into())),
        [only] => Ok(KinematicState::at_rest(only.x, only.y, only.theta)),
        [a, b, ..] => {
            let dt = b.t - a.t;
            Ok(KinematicState::moving(
                a.x,
                a.y,
                (b.x - a.x) / dt,
                (b.y - a.y) / dt,
                a.theta,
            ))
        }
    }
}

/// Integer decimation factor `source / output`.
pub fn decimation_factor(source_rate_hz: f64, output_rate_hz: f64) -> Result<usize> {
    if !(output_rate_hz > 0.0) || !(source_rate_hz >= output_rate_hz) {
        return Err(Error::Config(format!(
            "need source rate >= output rate > 0, got {source_rate_hz} Hz and {output_rate_hz} Hz"
        )));
    }
    let ratio = source_rate_hz / output_rate_hz;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "source rate {source_rate_hz} Hz is not an integer multiple of {output_rate_hz} Hz"
        )));
    }
    Ok(rounded as usize)
}

fn normal(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("validated std"))
}

/// Synthesizes an inertial stream from a trajectory sampled at
/// `source_rate_hz`, then keeps every `source/output`-th sample.
pub fn simulate_imu(
    truth: &Trajectory,
    model: &ImuNoiseModel,
    source_rate_hz: f64,
    output_rate_hz: f64,
    seed: u64,
) -> Result<Vec<ImuSample>> {
    model.validate()?;
    let step = decimation_factor(source_rate_hz, output_rate_hz)?;
    let d = differentiate_truth(truth)?;

    let accel_std = match model.accel {
        AccelNoise::Std(s) => s,
        AccelNoise::SnrDb(db) => {
            let signal =
                d.accel_body.iter().map(|a| a[0] * a[0] + a[1] * a[1]).sum::<f64>() / d.accel_body.len() as f64;
            if signal <= 0.0 {
                return Err(Error::Config(
                    "SNR-specified accelerometer noise needs non-zero true acceleration".into(),
                ));
            }
            (signal / 10f64.powf(db / 10.0) / 2.0).sqrt()
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |dist: &Option<Normal<f64>>| dist.as_ref().map_or(0.0, |n| n.sample(&mut rng));
    let bias_dist = normal(model.accel_bias_std);
    let bias = [draw(&bias_dist), draw(&bias_dist)];
    let accel_dist = normal(accel_std);
    let gyro_dist = normal(model.gyro_noise_std);

    let poses = truth.poses();
    let mut out = Vec::with_capacity(poses.len() / step + 1);
    for i in (0..poses.len()).step_by(step) {
        let [ax, ay] = d.accel_body[i];
        out.push(ImuSample::new(
            poses[i].t,
            ax + bias[0] + draw(&accel_dist),
            ay + bias[1] + draw(&accel_dist),
            d.omega[i] + model.gyro_bias + draw(&gyro_dist),
        ));
    }
    Ok(out)
}
