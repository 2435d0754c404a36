//! Synthetic replication scenario: cart path, anchor deployment, sensor
//! rates and noise, plus offline filter calibration.

use serde::{Deserialize, Serialize};

use crate::channel::{simulate_ranges, ChannelParams};
use crate::epoch::bucket_epochs;
use crate::error::{Error, Result};
use crate::fusion::{epoch_fix, FilterConfig};
use crate::imu::{dead_reckon_states, initial_state_from_truth, simulate_imu, AccelNoise, ImuNoiseModel};
use crate::model::{
    normalize_angle, validate_anchors, Anchor, ImuSample, KinematicState, RangeMeasurement, TimedPose, Trajectory,
};
use crate::seed::{mix_seed, stream};

/// Smallest variance handed to the filter as a fix variance.
const MIN_FIX_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Path polyline, meters.
    pub waypoints: Vec<[f64; 2]>,
    /// Radius of the circular arc joining consecutive legs; 0 turns in place.
    #[serde(default)]
    pub corner_radius: f64,
    /// `(arc length, speed)` knots; speed is linear in arc length between
    /// knots and constant beyond the ends.
    pub speed_profile: Vec<(f64, f64)>,
    pub anchors: Vec<Anchor>,
    pub imu_source_rate_hz: f64,
    pub imu_rate_hz: f64,
    pub uwb_rate_hz: f64,
    pub noise: ImuNoiseModel,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    /// Corridor deployment used for the comparative simulation: an L-shaped
    /// 18 m path driven at 0.15 to 0.45 m/s, six anchors in line of sight near
    /// the corridor and four inside side rooms, 500 Hz inertial data
    /// decimated to 5 Hz and UWB ranging at 2 Hz.
    pub fn replication() -> Self {
        Self {
            waypoints: vec![[0.0, 0.0], [12.0, 0.0], [12.0, 6.0]],
            corner_radius: 0.5,
            speed_profile: vec![
                (0.0, 0.15),
                (3.0, 0.45),
                (6.0, 0.2),
                (9.0, 0.4),
                (12.0, 0.15),
                (15.0, 0.45),
                (18.0, 0.2),
            ],
            anchors: vec![
                Anchor::new(1, 13.5, -1.5, true),
                Anchor::new(2, 14.0, 7.5, true),
                Anchor::new(3, 5.5, 2.5, true),
                Anchor::new(4, 14.0, 3.5, true),
                Anchor::new(5, 10.5, 8.5, true),
                Anchor::new(6, 13.5, 1.0, true),
                Anchor::new(7, 13.0, -7.0, false),
                Anchor::new(8, 9.5, -5.5, false),
                Anchor::new(9, 1.0, 7.0, false),
                Anchor::new(10, -2.0, 3.5, false),
            ],
            imu_source_rate_hz: 500.0,
            imu_rate_hz: 5.0,
            uwb_rate_hz: 2.0,
            noise: ImuNoiseModel {
                accel: AccelNoise::SnrDb(60.0),
                accel_bias_std: 0.0,
                gyro_bias: 0.007,
                gyro_noise_std: 0.001,
            },
            channel: ChannelParams::default(),
            seed: 2013,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::Config("scenario needs at least two waypoints".into()));
        }
        if self.speed_profile.is_empty() {
            return Err(Error::Config("speed profile is empty".into()));
        }
        if self
            .speed_profile
            .iter()
            .any(|&(s, v)| !(v > 0.0 && v.is_finite()) || !s.is_finite())
        {
            return Err(Error::Config("speed profile speeds must be positive and finite".into()));
        }
        if self.speed_profile.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Config(
                "speed profile positions must be strictly increasing".into(),
            ));
        }
        if !(self.corner_radius >= 0.0 && self.corner_radius.is_finite()) {
            return Err(Error::Config("corner radius must be non-negative".into()));
        }
        for (name, r) in [
            ("imu_source_rate_hz", self.imu_source_rate_hz),
            ("imu_rate_hz", self.imu_rate_hz),
            ("uwb_rate_hz", self.uwb_rate_hz),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {r}")));
            }
        }
        crate::imu::decimation_factor(self.imu_source_rate_hz, self.imu_rate_hz)?;
        validate_anchors(&self.anchors)?;
        self.noise.validate()?;
        self.channel.validate()
    }

    /// Dense ground truth at `imu_source_rate_hz`.
    pub fn generate_path(&self) -> Result<Trajectory> {
        generate_path(self)
    }

    /// Sensor streams for one run. The inertial and radio noise use
    /// independent sub-seeds of `run_seed`.
    pub fn simulate(&self, truth: &Trajectory, run_seed: u64) -> Result<SensorData> {
        let imu = simulate_imu(
            truth,
            &self.noise,
            self.imu_source_rate_hz,
            self.imu_rate_hz,
            mix_seed(&[run_seed, stream::IMU]),
        )?;
        let ranges = simulate_ranges(
            truth,
            &self.anchors,
            self.uwb_rate_hz,
            &self.channel,
            mix_seed(&[run_seed, stream::UWB]),
        )?;
        Ok(SensorData { imu, ranges })
    }

    /// Filter noise variances from a dedicated calibration run.
    pub fn calibrate(&self, truth: &Trajectory, epoch_tolerance: f64) -> Result<FilterConfig> {
        let data = self.simulate(truth, mix_seed(&[self.seed, stream::CALIBRATION]))?;
        let initial = initial_state_from_truth(truth)?;
        calibrate_filter(truth, &initial, &data.imu, &data.ranges, &self.anchors, epoch_tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorData {
    pub imu: Vec<ImuSample>,
    pub ranges: Vec<RangeMeasurement>,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line {
        start: [f64; 2],
        dir: [f64; 2],
        len: f64,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        /// +1 counter-clockwise, -1 clockwise.
        sign: f64,
        len: f64,
        heading: f64,
    },
}

impl Piece {
    fn len(&self) -> f64 {
        match *self {
            Piece::Line { len, .. } | Piece::Arc { len, .. } => len,
        }
    }

    fn at(&self, s: f64) -> ([f64; 2], f64) {
        match *self {
            Piece::Line { start, dir, .. } => ([start[0] + dir[0] * s, start[1] + dir[1] * s], dir[1].atan2(dir[0])),
            Piece::Arc {
                center,
                radius,
                start_angle,
                sign,
                heading,
                ..
            } => {
                let a = start_angle + sign * s / radius;
                (
                    [center[0] + radius * a.cos(), center[1] + radius * a.sin()],
                    heading + sign * s / radius,
                )
            }
        }
    }
}

fn unit(from: [f64; 2], to: [f64; 2]) -> Result<([f64; 2], f64)> {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    let len = dx.hypot(dy);
    if !(len > 0.0) {
        return Err(Error::Config(format!("duplicate consecutive waypoints at {from:?}")));
    }
    Ok(([dx / len, dy / len], len))
}

fn build_pieces(waypoints: &[[f64; 2]], radius: f64) -> Result<Vec<Piece>> {
    let n = waypoints.len();
    let mut pieces = Vec::new();
    let mut start = waypoints[0];
    for i in 0..n - 1 {
        let (u, _) = unit(waypoints[i], waypoints[i + 1])?;
        let mut end = waypoints[i + 1];
        let mut corner = None;
        if i + 2 < n && radius > 0.0 {
            let (w, _) = unit(waypoints[i + 1], waypoints[i + 2])?;
            let turn = (u[0] * w[1] - u[1] * w[0]).atan2(u[0] * w[0] + u[1] * w[1]);
            if turn.abs() > 1e-12 {
                if turn.abs() > std::f64::consts::PI - 1e-6 {
                    return Err(Error::Config(format!(
                        "path reverses at waypoint {} and cannot be rounded",
                        i + 1
                    )));
                }
                let tangent = radius * (turn.abs() / 2.0).tan();
                end = [end[0] - u[0] * tangent, end[1] - u[1] * tangent];
                corner = Some((w, turn, tangent));
            }
        }
        let len = (end[0] - start[0]) * u[0] + (end[1] - start[1]) * u[1];
        if len < -1e-9 {
            return Err(Error::Config(format!(
                "corner radius {radius} m too large for the leg ending at waypoint {}",
                i + 1
            )));
        }
        pieces.push(Piece::Line {
            start,
            dir: u,
            len: len.max(0.0),
        });
        start = waypoints[i + 1];
        if let Some((w, turn, tangent)) = corner {
            let sign = turn.signum();
            let normal = [-u[1] * sign, u[0] * sign];
            let center = [end[0] + normal[0] * radius, end[1] + normal[1] * radius];
            pieces.push(Piece::Arc {
                center,
                radius,
                start_angle: (end[1] - center[1]).atan2(end[0] - center[0]),
                sign,
                len: radius * turn.abs(),
                heading: u[1].atan2(u[0]),
            });
            start = [start[0] + w[0] * tangent, start[1] + w[1] * tangent];
        }
    }
    Ok(pieces)
}

fn pose_on(pieces: &[Piece], mut s: f64) -> ([f64; 2], f64) {
    for (i, p) in pieces.iter().enumerate() {
        if s <= p.len() || i == pieces.len() - 1 {
            return p.at(s.min(p.len()));
        }
        s -= p.len();
    }
    unreachable!("path has at least one piece")
}

/// Speed profile knots clipped to `[0, total]`, constant beyond the ends.
fn profile_knots(profile: &[(f64, f64)], total: f64) -> Vec<(f64, f64)> {
    let speed_at = |s: f64| -> f64 {
        let i = profile.partition_point(|k| k.0 <= s);
        match i {
            0 => profile[0].1,
            i if i == profile.len() => profile[i - 1].1,
            i => {
                let (s0, v0) = profile[i - 1];
                let (s1, v1) = profile[i];
                v0 + (v1 - v0) * (s - s0) / (s1 - s0)
            }
        }
    };
    let mut knots = vec![(0.0, speed_at(0.0))];
    knots.extend(profile.iter().copied().filter(|k| k.0 > 0.0 && k.0 < total));
    knots.push((total, speed_at(total)));
    knots
}

/// Time to cover one knot interval with speed linear in arc length, and the
/// arc length reached after `tau` seconds into it.
struct Ramp {
    s0: f64,
    v0: f64,
    slope: f64,
    duration: f64,
}

impl Ramp {
    fn new((s0, v0): (f64, f64), (s1, v1): (f64, f64)) -> Self {
        let slope = (v1 - v0) / (s1 - s0);
        let duration = if slope.abs() < 1e-12 {
            (s1 - s0) / v0
        } else {
            (v1 / v0).ln() / slope
        };
        Self {
            s0,
            v0,
            slope,
            duration,
        }
    }

    fn position(&self, tau: f64) -> f64 {
        if self.slope.abs() < 1e-12 {
            self.s0 + self.v0 * tau
        } else {
            self.s0 + self.v0 / self.slope * (self.slope * tau).exp_m1()
        }
    }
}

/// Samples the cart path at `imu_source_rate_hz` from t = 0 until the end of
/// the path is reached.
pub fn generate_path(spec: &ScenarioSpec) -> Result<Trajectory> {
    spec.validate()?;
    let pieces = build_pieces(&spec.waypoints, spec.corner_radius)?;
    let total: f64 = pieces.iter().map(Piece::len).sum();
    let knots = profile_knots(&spec.speed_profile, total);
    let ramps: Vec<Ramp> = knots.windows(2).map(|w| Ramp::new(w[0], w[1])).collect();
    let mut starts = Vec::with_capacity(ramps.len());
    let mut acc = 0.0;
    for r in &ramps {
        starts.push(acc);
        acc += r.duration;
    }
    let duration = acc;

    let rate = spec.imu_source_rate_hz;
    let n = (duration * rate + 1e-9).floor() as usize;
    let mut poses = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let t = k as f64 / rate;
        while j + 1 < ramps.len() && t >= starts[j + 1] {
            j += 1;
        }
        let s = ramps[j].position(t - starts[j]).min(total);
        let (p, heading) = pose_on(&pieces, s);
        poses.push(TimedPose::new(t, p[0], p[1], normalize_angle(heading)));
    }
    Trajectory::new(poses)
}

fn per_axis_variance(samples: &[[f64; 2]]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let axis = |k: usize| {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n as f64;
        samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    (axis(0) + axis(1)) / 2.0
}

/// Estimates filter variances from a run with known truth: `r` is the
/// per-axis sample variance of the Min-Max fix errors and `q` that of the
/// per-tick dead-reckoning displacement errors. `p0` is zero since the
/// starting pose is known.
pub fn calibrate_filter(
    truth: &Trajectory,
    initial: &KinematicState,
    imu: &[ImuSample],
    ranges: &[RangeMeasurement],
    anchors: &[Anchor],
    epoch_tolerance: f64,
) -> Result<FilterConfig> {
    let states = dead_reckon_states(initial, imu)?;
    let mut step_errors = Vec::with_capacity(imu.len());
    for (w, s) in imu.windows(2).zip(states.windows(2)) {
        let a = truth.interpolate(w[0].t)?;
        let b = truth.interpolate(w[1].t)?;
        step_errors.push([(s[1].x - s[0].x) - (b.x - a.x), (s[1].y - s[0].y) - (b.y - a.y)]);
    }
    let mut fix_errors = Vec::new();
    for e in bucket_epochs(ranges, epoch_tolerance) {
        if let Some(fix) = epoch_fix(&e, anchors) {
            let p = truth.interpolate(e.t)?;
            fix_errors.push([fix[0] - p.x, fix[1] - p.y]);
        }
    }
    if fix_errors.len() < 2 {
        return Err(Error::EmptyInput("calibration needs at least two UWB fixes".into()));
    }
    Ok(FilterConfig {
        q: per_axis_variance(&step_errors),
        r: per_axis_variance(&fix_errors).max(MIN_FIX_VARIANCE),
        p0: 0.0,
    })
}
