//! Single-epoch position fixes from anchor ranges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Anchor;

/// Axis-aligned box; the bounds may cross when the per-anchor squares do not
/// intersect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl BoundingBox {
    pub fn center(&self) -> [f64; 2] {
        [(self.x_lo + self.x_hi) / 2.0, (self.y_lo + self.y_hi) / 2.0]
    }

    pub fn is_empty(&self) -> bool {
        self.x_lo > self.x_hi || self.y_lo > self.y_hi
    }
}

/// Intersection of the squares `[x_i ± d_i] × [y_i ± d_i]`.
pub fn min_max_box(ranges: &[(Anchor, f64)]) -> Result<BoundingBox> {
    if ranges.is_empty() {
        return Err(Error::EmptyInput("Min-Max needs at least one range".into()));
    }
    Ok(ranges.iter().fold(
        BoundingBox {
            x_lo: f64::NEG_INFINITY,
            x_hi: f64::INFINITY,
            y_lo: f64::NEG_INFINITY,
            y_hi: f64::INFINITY,
        },
        |b, (a, d)| BoundingBox {
            x_lo: b.x_lo.max(a.x - d),
            x_hi: b.x_hi.min(a.x + d),
            y_lo: b.y_lo.max(a.y - d),
            y_hi: b.y_hi.min(a.y + d),
        },
    ))
}

/// Min-Max position estimate: center of [`min_max_box`], even when the box
/// is inverted.
pub fn min_max(ranges: &[(Anchor, f64)]) -> Result<[f64; 2]> {
    Ok(min_max_box(ranges)?.center())
}

/// Linearized least-squares multilateration.
///
/// Subtracting the first anchor's circle equation from the others leaves a
/// linear system in `(x, y)`, solved through its normal equations.
pub fn multilateration_ls(ranges: &[(Anchor, f64)]) -> Result<[f64; 2]> {
    if ranges.len() < 3 {
        return Err(Error::Underdetermined {
            needed: 3,
            got: ranges.len(),
        });
    }
    let (a0, d0) = ranges[0];
    let k0 = a0.x * a0.x + a0.y * a0.y - d0 * d0;
    // Normal matrix [[sxx, sxy], [sxy, syy]] and right-hand side.
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, d) in &ranges[1..] {
        let ax = 2.0 * (a.x - a0.x);
        let ay = 2.0 * (a.y - a0.y);
        let rhs = a.x * a.x + a.y * a.y - d * d - k0;
        sxx += ax * ax;
        sxy += ax * ay;
        syy += ay * ay;
        bx += ax * rhs;
        by += ay * rhs;
    }
    // Eigenvalues of the normal matrix are the squared singular values.
    let mean = (sxx + syy) / 2.0;
    let spread = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    let (l_max, l_min) = (mean + spread, mean - spread);
    if !(l_max > 0.0) || l_min.max(0.0).sqrt() < 1e-9 * l_max.sqrt() {
        return Err(Error::DegenerateGeometry("anchors are collinear or coincident".into()));
    }
    let det = sxx * syy - sxy * sxy;
    Ok([(syy * bx - sxy * by) / det, (sxx * by - sxy * bx) / det])
}
