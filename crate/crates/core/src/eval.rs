use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Trajectory;

/// Position error summary of an estimated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub max_error: f64,
    /// `(t, error)` at every estimate time.
    pub error_series: Vec<(f64, f64)>,
    pub n_samples: usize,
}

/// Compares each estimate with the truth interpolated at the same time.
pub fn evaluate(estimates: &Trajectory, truth: &Trajectory) -> Result<EvalReport> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("no estimates to evaluate".into()));
    }
    let error_series = estimates
        .iter()
        .map(|e| Ok((e.t, e.distance_to(&truth.interpolate(e.t)?))))
        .collect::<Result<Vec<_>>>()?;
    let n = error_series.len();
    let mse = error_series.iter().map(|(_, e)| e * e).sum::<f64>() / n as f64;
    let max_error = error_series.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(EvalReport {
        // Guard the rmse <= max invariant against last-ulp rounding when all
        // errors are equal.
        rmse: mse.sqrt().min(max_error),
        max_error,
        error_series,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimedPose;
    use approx::assert_abs_diff_eq;

    fn truth() -> Trajectory {
        Trajectory::new(
            (0..10)
                .map(|k| TimedPose::new(k as f64, k as f64 * 0.5, (k as f64).sin(), 0.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let r = evaluate(&truth(), &truth()).unwrap();
        assert_eq!((r.rmse, r.max_error, r.n_samples), (0.0, 0.0, 10));
    }

    #[test]
    fn constant_offset() {
        let shifted = Trajectory::new(
            truth()
                .iter()
                .map(|p| TimedPose::new(p.t, p.x + 3.0, p.y + 4.0, p.theta))
                .collect(),
        )
        .unwrap();
        let r = evaluate(&shifted, &truth()).unwrap();
        assert_abs_diff_eq!(r.rmse, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.max_error, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn mixed_errors() {
        let t = Trajectory::new((0..3).map(|k| TimedPose::new(k as f64, 0.0, 0.0, 0.0)).collect()).unwrap();
        let e = Trajectory::new(vec![
            TimedPose::new(0.0, 1.0, 0.0, 0.0),
            TimedPose::new(1.0, 0.0, -1.0, 0.0),
            TimedPose::new(2.0, 7.0, 0.0, 0.0),
        ])
        .unwrap();
        let r = evaluate(&e, &t).unwrap();
        assert_abs_diff_eq!(r.rmse, 17f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rmse, 4.1231, epsilon = 1e-4);
        assert_eq!(r.max_error, 7.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            evaluate(&Trajectory::default(), &truth()),
            Err(Error::EmptyInput(_))
        ));
        let late = Trajectory::new(vec![TimedPose::new(20.0, 0.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(evaluate(&late, &truth()), Err(Error::OutOfRange { .. })));
    }
}
