//! Grouping of range measurements into position-fix epochs.

use crate::model::RangeMeasurement;

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    /// Time of the first range in the epoch.
    pub t: f64,
    pub ranges: Vec<RangeMeasurement>,
}

/// Greedy grouping: a range joins the open epoch if it lies within
/// `tolerance` of the epoch's first range, otherwise it opens a new one.
/// Within an epoch only the earliest range per anchor is kept.
///
/// Input is stably sorted by time first, so equal timestamps keep their
/// input order.
pub fn bucket_epochs(ranges: &[RangeMeasurement], tolerance: f64) -> Vec<Epoch> {
    let mut sorted = ranges.to_vec();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut epochs: Vec<Epoch> = Vec::new();
    for r in sorted {
        match epochs.last_mut() {
            Some(e) if r.t - e.t <= tolerance => {
                if e.ranges.iter().all(|x| x.anchor_id != r.anchor_id) {
                    e.ranges.push(r);
                }
            }
            _ => epochs.push(Epoch {
                t: r.t,
                ranges: vec![r],
            }),
        }
    }
    epochs
}
