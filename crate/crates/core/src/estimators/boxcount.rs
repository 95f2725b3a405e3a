use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeDomain;
use crate::stats::linear_fit;
use crate::tvs::TvsApprox;
use crate::{Error, Result};

/// Largest box side used by default.
pub const COARSEST_SCALE: f64 = 0.125;
/// Boxes smaller than this many lattice spacings are not used.
pub const FINEST_SPACINGS: f64 = 4.0;
/// Boxes with fewer occupied cells than this are left out of the fit.
pub const MIN_FIT_COUNT: usize = 20;
/// Smallest scales dropped from the fit.
pub const DROPPED_FINE_SCALES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountResult {
    /// Box sides, coarsest first.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Slope of `log N` against `log(1/ε)` over `scales[window.0..=window.1]`.
    pub slope: f64,
    pub window: (usize, usize),
}

/// Dyadic box sides `2^{−k}` from [`COARSEST_SCALE`] down to `4h`.
pub fn dyadic_scales(h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = COARSEST_SCALE;
    while e >= FINEST_SPACINGS * h * (1.0 - 1e-12) {
        out.push(e);
        e *= 0.5;
    }
    out
}

/// Counts the boxes of side `ε` (aligned with the grid of cells of side `h`
/// anchored at `(−1, −1)`) that contain a cell of `cells`, for every `ε` in
/// `scales`, and fits the slope.
pub fn box_count_cells(cells: &[(i64, i64)], h: f64, scales: &[f64]) -> Result<BoxCountResult> {
    if scales.len() < 4 {
        return Err(Error::invalid(
            "scales",
            format!("need at least 4 scales, got {}", scales.len()),
        ));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("scales", "must be strictly decreasing"));
    }
    let mut counts = Vec::with_capacity(scales.len());
    for &eps in scales {
        let m = (eps / h).round() as i64;
        if m < 1 || ((m as f64) * h - eps).abs() > 1e-9 * eps {
            return Err(Error::invalid(
                "scales",
                format!("{eps} is not a multiple of the cell size {h}"),
            ));
        }
        let boxes: HashSet<(i64, i64)> = cells.iter().map(|&(i, j)| (i.div_euclid(m), j.div_euclid(m))).collect();
        counts.push(boxes.len());
    }
    let fine_end = scales.len() - DROPPED_FINE_SCALES;
    let fit: Vec<usize> = (0..fine_end).filter(|&k| counts[k] >= MIN_FIT_COUNT).collect();
    if fit.len() < 2 {
        return Err(Error::invalid(
            "scales",
            format!(
                "only {} scales left to fit after dropping fine and sparse ones",
                fit.len()
            ),
        ));
    }
    let xs: Vec<f64> = fit.iter().map(|&k| -scales[k].ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|&k| (counts[k] as f64).ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    Ok(BoxCountResult {
        scales: scales.to_vec(),
        counts,
        slope,
        window: (fit[0], *fit.last().expect("non-empty")),
    })
}

/// Box count of the frontier cells whose centres lie in the square
/// `[−w, w]²`; `w = 1/2` keeps the square a fixed distance from the circle.
pub fn box_count(domain: &LatticeDomain, tvs: &TvsApprox, half_width: f64) -> Result<BoxCountResult> {
    if !(half_width > 0.0 && half_width < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::invalid(
            "half_width",
            "the window must be a square inside the disc",
        ));
    }
    let n = domain.n() as i64;
    let h = domain.h();
    let cells: Vec<(i64, i64)> = tvs
        .frontier_cells()
        .iter()
        .map(|&c| (c as i64 % n, c as i64 / n))
        .filter(|&(i, j)| {
            let (x, y) = (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
            x.abs() < half_width && y.abs() < half_width
        })
        .collect();
    box_count_cells(&cells, h, &dyadic_scales(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = 1.0 / 512.0;

    #[test]
    fn filled_square_has_slope_two() {
        // cells of the square [−1/2, 1/2]², aligned with every dyadic box
        let cells: Vec<(i64, i64)> = (256..768).flat_map(|j| (256..768).map(move |i| (i, j))).collect();
        let r = box_count_cells(&cells, H, &dyadic_scales(H)).unwrap();
        assert_eq!(r.scales.len(), 5);
        assert!((r.slope - 2.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn segment_has_slope_one() {
        let cells: Vec<(i64, i64)> = (0..1024).map(|i| (i, 500)).collect();
        let r = box_count_cells(&cells, H, &dyadic_scales(H)).unwrap();
        assert!((r.slope - 1.0).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn too_few_scales() {
        assert!(box_count_cells(&[(0, 0)], H, &[0.125, 0.0625, 0.03125]).is_err());
        assert_eq!(dyadic_scales(1.0 / 64.0).len(), 2);
        assert_eq!(dyadic_scales(1.0 / 256.0).len(), 4);
        assert!(box_count_cells(&[(0, 0)], H, &[0.125, 0.0625, 0.03125, 0.02]).is_err());
    }

    proptest! {
        #[test]
        fn counts_refine_by_at_most_four(cells in prop::collection::vec((0i64..1024, 0i64..1024), 1..400)) {
            let scales = dyadic_scales(H);
            let mut counts = Vec::new();
            for &e in &scales {
                let m = (e / H).round() as i64;
                let set: HashSet<_> = cells.iter().map(|&(i, j)| (i / m, j / m)).collect();
                counts.push(set.len());
            }
            for k in 1..counts.len() {
                prop_assert!(counts[k] >= counts[k - 1]);
                prop_assert!(counts[k] <= 4 * counts[k - 1]);
            }
            if let Ok(r) = box_count_cells(&cells, H, &scales) {
                prop_assert_eq!(&r.counts, &counts);
                prop_assert!((-1e-9..=2.0 + 1e-9).contains(&r.slope));
            }
        }
    }
}
