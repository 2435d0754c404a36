//! Multipath channel realizations and time-of-arrival ranging.
//!
//! Each anchor-target link gets a single-cluster tapped-delay-line
//! realization: Poisson tap arrivals, exponentially decaying mean power,
//! Rayleigh magnitudes. The range is taken from the strongest tap for both
//! LOS and NLOS links, so a faded direct path or a late NLOS cluster shows up
//! as a positive range error.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Anchor, RangeMeasurement, Trajectory};
use crate::seed::mix_seed;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathTap {
    pub magnitude: f64,
    pub phase: f64,
    /// Seconds.
    pub delay: f64,
}

/// Channel impulse response taps, sorted by delay. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<MultipathTap>,
    pub los: bool,
}

impl ChannelRealization {
    pub fn new(mut taps: Vec<MultipathTap>, los: bool) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptyInput("channel realization needs at least one tap".into()));
        }
        if taps
            .iter()
            .any(|t| !(t.delay >= 0.0 && t.magnitude >= 0.0 && t.delay.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "tap delays and magnitudes must be finite and non-negative".into(),
            ));
        }
        taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(Self { taps, los })
    }

    pub fn taps(&self) -> &[MultipathTap] {
        &self.taps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// Mean tap arrival rate, 1/s.
    pub tap_arrival_rate: f64,
    /// Exponential decay constant of mean tap power vs excess delay, s.
    pub power_decay_const: f64,
    pub num_taps_max: usize,
    /// Mean extra delay of the first arriving tap on NLOS links, s.
    pub nlos_excess_delay_mean: f64,
    /// Power ratio of the LOS direct path over the mean first-tap power.
    pub los_direct_power_boost: f64,
    /// TOA quantization grid, s; 0 disables.
    pub delay_resolution: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            tap_arrival_rate: 1e9,
            power_decay_const: 20e-9,
            num_taps_max: 50,
            nlos_excess_delay_mean: 10e-9,
            los_direct_power_boost: 10.0,
            delay_resolution: 2e-9,
        }
    }
}

impl ChannelParams {
    /// One tap, no quantization: the strongest path is the direct path.
    pub fn ideal() -> Self {
        Self {
            num_taps_max: 1,
            delay_resolution: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tap_arrival_rate", self.tap_arrival_rate),
            ("power_decay_const", self.power_decay_const),
            ("nlos_excess_delay_mean", self.nlos_excess_delay_mean),
            ("los_direct_power_boost", self.los_direct_power_boost),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_taps_max == 0 {
            return Err(Error::Config("num_taps_max must be at least 1".into()));
        }
        if !(self.delay_resolution >= 0.0 && self.delay_resolution.is_finite()) {
            return Err(Error::Config(format!(
                "delay_resolution must be non-negative, got {}",
                self.delay_resolution
            )));
        }
        Ok(())
    }
}

/// Draws one channel realization for a link of length `true_distance`.
pub fn realize_channel(true_distance: f64, los: bool, params: &ChannelParams, seed: u64) -> Result<ChannelRealization> {
    realize_channel_with(true_distance, los, params, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn realize_channel_with<R: Rng + ?Sized>(
    true_distance: f64,
    los: bool,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(true_distance > 0.0) || !true_distance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "link distance must be positive, got {true_distance}"
        )));
    }
    params.validate()?;
    let mut first = true_distance / SPEED_OF_LIGHT;
    if !los {
        let excess = Exp::new(1.0 / params.nlos_excess_delay_mean).expect("validated");
        first += excess.sample(rng);
    }
    let arrivals = Exp::new(params.tap_arrival_rate).expect("validated");

    let mut taps = Vec::with_capacity(params.num_taps_max);
    let mut delay = first;
    for k in 0..params.num_taps_max {
        if k > 0 {
            delay += arrivals.sample(rng);
        }
        let mean_power = (-(delay - first) / params.power_decay_const).exp();
        // Rayleigh magnitude: exponentially distributed power.
        let power: f64 = Exp1.sample(rng);
        let mut magnitude = (mean_power * power).sqrt();
        if los && k == 0 {
            magnitude *= params.los_direct_power_boost.sqrt();
        }
        let phase = rng.random::<f64>() * TAU;
        taps.push(MultipathTap {
            magnitude,
            phase,
            delay,
        });
    }
    ChannelRealization::new(taps, los)
}

/// Delay of the strongest tap; ties go to the earliest.
pub fn extract_toa(ch: &ChannelRealization) -> f64 {
    ch.taps()
        .iter()
        .fold(None::<&MultipathTap>, |best, tap| match best {
            Some(b) if tap.magnitude <= b.magnitude => Some(b),
            _ => Some(tap),
        })
        .map(|t| t.delay)
        .expect("realization has at least one tap")
}

/// `c·t`, with `t` first rounded to the nearest multiple of
/// `delay_resolution` when that is positive.
pub fn range_from_toa(t: f64, delay_resolution: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "arrival time must be non-negative, got {t}"
        )));
    }
    let t = if delay_resolution > 0.0 {
        (t / delay_resolution).round() * delay_resolution
    } else {
        t
    };
    Ok(SPEED_OF_LIGHT * t)
}

/// Tick times `start + k/rate` up to `end` inclusive.
pub(crate) fn tick_times(start: f64, end: f64, rate_hz: f64) -> Vec<f64> {
    let n = ((end - start) * rate_hz + 1e-9).floor() as usize;
    (0..=n).map(|k| (start + k as f64 / rate_hz).min(end)).collect()
}

/// One range per anchor at every UWB tick along `truth`.
///
/// Each (tick, anchor) link draws from its own generator seeded by
/// `mix_seed([seed, tick, anchor_id])`, so the output does not depend on
/// anchor order or on which ticks are computed first.
pub fn simulate_ranges(
    truth: &Trajectory,
    anchors: &[Anchor],
    rate_hz: f64,
    params: &ChannelParams,
    seed: u64,
) -> Result<Vec<RangeMeasurement>> {
    if anchors.is_empty() {
        return Err(Error::Config("range simulation needs at least one anchor".into()));
    }
    if !(rate_hz > 0.0) {
        return Err(Error::Config(format!("UWB rate must be positive, got {rate_hz}")));
    }
    params.validate()?;
    let (start, end) = truth
        .span()
        .ok_or_else(|| Error::EmptyInput("truth trajectory is empty".into()))?;

    let ticks = tick_times(start, end, rate_hz);
    let mut out = Vec::with_capacity(ticks.len() * anchors.len());
    for (k, &t) in ticks.iter().enumerate() {
        let pose = truth.interpolate(t)?;
        for a in anchors {
            // A target sitting on an anchor still gets a (tiny) positive link.
            let d = a.distance_to(pose.x, pose.y).max(1e-6);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, k as u64, a.id as u64]));
            let ch = realize_channel_with(d, a.los, params, &mut rng)?;
            let range = range_from_toa(extract_toa(&ch), params.delay_resolution)?;
            out.push(RangeMeasurement::new(t, a.id, range));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimedPose;
    use approx::assert_abs_diff_eq;

    fn tap(magnitude: f64, delay_ns: f64) -> MultipathTap {
        MultipathTap {
            magnitude,
            phase: 0.0,
            delay: delay_ns * 1e-9,
        }
    }

    #[test]
    fn strongest_tap_wins() {
        let ch = ChannelRealization::new(vec![tap(0.2, 5.0), tap(0.9, 10.0), tap(0.5, 15.0)], true).unwrap();
        assert_abs_diff_eq!(extract_toa(&ch), 10e-9, epsilon = 1e-18);
        let one = ChannelRealization::new(vec![tap(1.0, 7.0)], true).unwrap();
        assert_abs_diff_eq!(extract_toa(&one), 7e-9, epsilon = 1e-18);
    }

    #[test]
    fn tie_goes_to_earliest() {
        let ch = ChannelRealization::new(vec![tap(0.9, 10.0), tap(0.9, 5.0)], false).unwrap();
        assert_abs_diff_eq!(extract_toa(&ch), 5e-9, epsilon = 1e-18);
    }

    #[test]
    fn empty_realization_rejected() {
        assert!(ChannelRealization::new(vec![], true).is_err());
    }

    #[test]
    fn range_examples() {
        assert_eq!(range_from_toa(0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(range_from_toa(10.007e-9, 0.0).unwrap(), 3.0, epsilon = 1e-4);
        assert_abs_diff_eq!(range_from_toa(10e-9, 2e-9).unwrap(), 2.99792, epsilon = 1e-5);
        assert_abs_diff_eq!(
            range_from_toa(10.9e-9, 2e-9).unwrap(),
            10e-9 * SPEED_OF_LIGHT,
            epsilon = 1e-9
        );
        assert!(range_from_toa(-1e-9, 0.0).is_err());
    }

    #[test]
    fn single_los_tap_is_direct_path() {
        let p = ChannelParams {
            num_taps_max: 1,
            ..ChannelParams::default()
        };
        let ch = realize_channel(3.0, true, &p, 9).unwrap();
        assert_eq!(ch.taps().len(), 1);
        assert_eq!(ch.taps()[0].delay, 3.0 / SPEED_OF_LIGHT);
    }

    #[test]
    fn nlos_first_tap_is_late() {
        let p = ChannelParams::default();
        for seed in 0..500 {
            let ch = realize_channel(4.0, false, &p, seed).unwrap();
            assert!(ch.taps()[0].delay > 4.0 / SPEED_OF_LIGHT);
        }
    }

    #[test]
    fn realization_invariants() {
        let p = ChannelParams::default();
        let ch = realize_channel(5.0, true, &p, 1).unwrap();
        assert_eq!(ch.taps().len(), p.num_taps_max);
        assert!(ch.taps().windows(2).all(|w| w[0].delay <= w[1].delay));
        assert!(ch
            .taps()
            .iter()
            .all(|t| t.magnitude >= 0.0 && (0.0..TAU).contains(&t.phase)));
        assert!(realize_channel(0.0, true, &p, 1).is_err());
        assert!(realize_channel(-1.0, true, &p, 1).is_err());
    }

    fn line(secs: f64) -> Trajectory {
        Trajectory::new(
            (0..=(secs as usize * 10))
                .map(|k| {
                    let t = k as f64 / 10.0;
                    TimedPose::new(t, 0.3 * t, 1.0, 0.0)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn counts_ticks_including_zero() {
        let anchors: Vec<_> = (0..10).map(|i| Anchor::new(i, i as f64, -3.0, true)).collect();
        let r = simulate_ranges(&line(10.0), &anchors, 2.0, &ChannelParams::default(), 5).unwrap();
        assert_eq!(r.len(), 210);
    }

    #[test]
    fn ideal_channel_gives_true_ranges() {
        let anchors = [Anchor::new(1, 0.0, 0.0, true), Anchor::new(2, 5.0, 5.0, true)];
        let tr = line(6.0);
        let r = simulate_ranges(&tr, &anchors, 2.0, &ChannelParams::ideal(), 5).unwrap();
        for m in &r {
            let p = tr.interpolate(m.t).unwrap();
            let a = anchors.iter().find(|a| a.id == m.anchor_id).unwrap();
            assert_abs_diff_eq!(m.distance, a.distance_to(p.x, p.y), epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_anchor_list_is_config_error() {
        assert!(matches!(
            simulate_ranges(&line(1.0), &[], 2.0, &ChannelParams::default(), 0),
            Err(Error::Config(_))
        ));
    }
}
