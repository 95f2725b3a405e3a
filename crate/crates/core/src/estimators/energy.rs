use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::geometry::{point, Point};
use crate::{Error, Result};

/// `Σ_{i≠j} m_i m_j |x_i − x_j|^{−s}`, both orders of every pair.
pub fn energy_integral(points: &[(Point, f64)], s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::invalid("s", format!("must lie in (0, 2), got {s}")));
    }
    let rows: Vec<Result<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(x, mx))| {
            let mut acc = 0.0;
            for &(y, my) in &points[i + 1..] {
                let d = (x - y).norm();
                if d == 0.0 {
                    return Err(Error::CoincidentPoints(format!("{x}")));
                }
                acc += my * d.powf(-s);
            }
            Ok(2.0 * mx * acc)
        })
        .collect();
    rows.into_iter().sum()
}

/// Lumps masses into square bins of side `bin`, placed at the bin centres.
pub fn coarsen(points: &[(Point, f64)], bin: f64) -> Vec<(Point, f64)> {
    let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for &(z, m) in points {
        if m != 0.0 {
            *acc.entry(((z.re / bin).floor() as i64, (z.im / bin).floor() as i64))
                .or_default() += m;
        }
    }
    acc.into_iter()
        .map(|((i, j), m)| (point((i as f64 + 0.5) * bin, (j as f64 + 0.5) * bin), m))
        .collect()
}
