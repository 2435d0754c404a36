//! Shared domain types: poses, kinematic state, sensor observations and
//! trajectories.
//!
//! All times are seconds relative to scenario start, all lengths meters and
//! all angles radians. Headings are kept in `(-π, π]`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Planar pose at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl TimedPose {
    pub fn new(t: f64, x: f64, y: f64, theta: f64) -> Self {
        Self {
            t,
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, other: &TimedPose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Planar motion state carried by dead reckoning.
///
/// `ax`, `ay` hold the most recent acceleration in the global frame and
/// `omega` the most recent angular rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub theta: f64,
    pub omega: f64,
}

impl KinematicState {
    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
            ..Self::default()
        }
    }

    pub fn moving(x: f64, y: f64, vx: f64, vy: f64, theta: f64) -> Self {
        Self {
            vx,
            vy,
            ..Self::at_rest(x, y, theta)
        }
    }

    pub fn pose(&self, t: f64) -> TimedPose {
        TimedPose::new(t, self.x, self.y, self.theta)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x, self.y, self.vx, self.vy, self.ax, self.ay, self.theta, self.omega,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// One inertial sample: body-frame planar accelerations and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub ax_body: f64,
    pub ay_body: f64,
    pub omega_z: f64,
}

impl ImuSample {
    pub fn new(t: f64, ax_body: f64, ay_body: f64, omega_z: f64) -> Self {
        Self {
            t,
            ax_body,
            ay_body,
            omega_z,
        }
    }
}

/// A ranging reference node at a surveyed position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    /// Line of sight to the path the target follows.
    pub los: bool,
}

impl Anchor {
    pub fn new(id: u32, x: f64, y: f64, los: bool) -> Self {
        Self { id, x, y, los }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Checks that anchor ids are unique.
pub fn validate_anchors(anchors: &[Anchor]) -> Result<()> {
    let mut ids: Vec<u32> = anchors.iter().map(|a| a.id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate anchor id {}", w[0])));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeMeasurement {
    pub t: f64,
    pub anchor_id: u32,
    pub distance: f64,
}

impl RangeMeasurement {
    pub fn new(t: f64, anchor_id: u32, distance: f64) -> Self {
        Self { t, anchor_id, distance }
    }
}

/// Time-ordered sequence of poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    poses: Vec<TimedPose>,
}

impl Trajectory {
    pub fn new(poses: Vec<TimedPose>) -> Result<Self> {
        for (i, p) in poses.iter().enumerate() {
            if !p.t.is_finite() || p.t < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "pose {i} has invalid timestamp {}",
                    p.t
                )));
            }
        }
        check_increasing(poses.iter().map(|p| p.t))?;
        Ok(Self { poses })
    }

    pub fn push(&mut self, pose: TimedPose) -> Result<()> {
        if let Some(last) = self.poses.last() {
            if pose.t <= last.t {
                return Err(Error::Ordering {
                    index: self.poses.len(),
                    prev: last.t,
                    next: pose.t,
                });
            }
        }
        self.poses.push(pose);
        Ok(())
    }

    pub fn poses(&self) -> &[TimedPose] {
        &self.poses
    }

    pub fn into_poses(self) -> Vec<TimedPose> {
        self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn first(&self) -> Option<&TimedPose> {
        self.poses.first()
    }

    pub fn last(&self) -> Option<&TimedPose> {
        self.poses.last()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TimedPose> {
        self.poses.iter()
    }

    /// `(first.t, last.t)`, or `None` when empty.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.poses.first()?.t, self.poses.last()?.t))
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.span().is_some_and(|(a, b)| t >= a && t <= b)
    }

    /// Pose at time `t`: linear in position, shortest-arc in heading.
    ///
    /// Knot times return the stored pose exactly.
    pub fn interpolate(&self, t: f64) -> Result<TimedPose> {
        let (start, end) = self
            .span()
            .ok_or_else(|| Error::EmptyInput("cannot interpolate an empty trajectory".into()))?;
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let i = self.poses.partition_point(|p| p.t < t);
        let hi = self.poses[i];
        if hi.t == t {
            return Ok(hi);
        }
        let lo = self.poses[i - 1];
        let f = (t - lo.t) / (hi.t - lo.t);
        let dtheta = normalize_angle(hi.theta - lo.theta);
        Ok(TimedPose::new(
            t,
            lo.x + f * (hi.x - lo.x),
            lo.y + f * (hi.y - lo.y),
            lo.theta + f * dtheta,
        ))
    }

    /// Sum of Euclidean segment lengths.
    pub fn path_length(&self) -> Result<f64> {
        if self.poses.is_empty() {
            return Err(Error::EmptyInput("path length of an empty trajectory".into()));
        }
        Ok(self.poses.windows(2).map(|w| w[0].distance_to(&w[1])).sum())
    }
}

impl<'a> IntoIterator for &'a Trajectory {
    type Item = &'a TimedPose;
    type IntoIter = std::slice::Iter<'a, TimedPose>;

    fn into_iter(self) -> Self::IntoIter {
        self.poses.iter()
    }
}

pub(crate) fn check_increasing(times: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, t) in times.into_iter().enumerate() {
        if let Some(p) = prev {
            if !(t > p) {
                return Err(Error::Ordering {
                    index: i,
                    prev: p,
                    next: t,
                });
            }
        }
        prev = Some(t);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn traj(points: &[(f64, f64, f64, f64)]) -> Trajectory {
        Trajectory::new(
            points
                .iter()
                .map(|&(t, x, y, th)| TimedPose::new(t, x, y, th))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(-7.0), -7.0 + TAU, epsilon = 1e-12);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn interpolate_midpoint() {
        let tr = traj(&[(0.0, 0.0, 0.0, 0.0), (1.0, 2.0, 0.0, 0.0)]);
        let p = tr.interpolate(0.5).unwrap();
        assert_eq!((p.x, p.y, p.theta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn interpolate_single_point() {
        let tr = traj(&[(0.0, 0.0, 0.0, 0.0)]);
        assert_eq!(tr.interpolate(0.0).unwrap(), TimedPose::new(0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn interpolate_heading_takes_short_arc_through_pi() {
        let tr = traj(&[(0.0, 0.0, 0.0, 3.0), (1.0, 0.0, 0.0, -3.0)]);
        let p = tr.interpolate(0.5).unwrap();
        assert_abs_diff_eq!(p.theta.abs(), PI, epsilon = 1e-9);
    }

    #[test]
    fn interpolate_out_of_range() {
        let tr = traj(&[(0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)]);
        assert!(matches!(tr.interpolate(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(tr.interpolate(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(
            Trajectory::default().interpolate(0.0),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(
            traj(&[(0.0, 0.0, 0.0, 0.0), (1.0, 3.0, 4.0, 0.0)])
                .path_length()
                .unwrap(),
            5.0
        );
        assert_eq!(traj(&[(0.0, 1.0, 1.0, 0.0)]).path_length().unwrap(), 0.0);
        let square = traj(&[
            (0.0, 0.0, 0.0, 0.0),
            (1.0, 1.0, 0.0, 0.0),
            (2.0, 1.0, 1.0, 0.0),
            (3.0, 0.0, 1.0, 0.0),
            (4.0, 0.0, 0.0, 0.0),
        ]);
        assert_abs_diff_eq!(square.path_length().unwrap(), 4.0, epsilon = 1e-12);
        assert!(matches!(Trajectory::default().path_length(), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn rejects_non_monotonic() {
        let poses = vec![TimedPose::new(1.0, 0.0, 0.0, 0.0), TimedPose::new(1.0, 0.0, 0.0, 0.0)];
        assert!(matches!(Trajectory::new(poses), Err(Error::Ordering { .. })));
        let mut tr = Trajectory::default();
        tr.push(TimedPose::new(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(tr.push(TimedPose::new(1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn duplicate_anchor_ids_rejected() {
        let a = [Anchor::new(1, 0.0, 0.0, true), Anchor::new(1, 1.0, 0.0, true)];
        assert!(validate_anchors(&a).is_err());
        assert!(validate_anchors(&a[..1]).is_ok());
    }
}
