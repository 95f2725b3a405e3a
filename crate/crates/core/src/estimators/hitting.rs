use serde::{Deserialize, Serialize};

use crate::analytic::{disc_conformal_radius, exit_survival, TvsParams};
use crate::geometry::Point;
use crate::stats::{linear_fit, Estimate};
use crate::{Error, Result};

/// Outcome of the radius law at a point for one extracted set: `Some(t)` with
/// `t = log r_𝔻(z) − log r_{𝔻∖A}(z)`, or `None` when `z` sits on the set at
/// lattice resolution (then `r_{𝔻∖A}(z)` is below every ε of interest).
pub type RadiusOutcome = Option<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnePointRow {
    pub eps: f64,
    /// Frequency of `r_{𝔻∖A}(z) ≤ ε`.
    pub estimate: Estimate,
    /// `c* r_𝔻(z)^{d−2} ε^{2−d}`.
    pub leading: f64,
    /// Exit-time survival at `log(r_𝔻(z)/ε)`.
    pub series: f64,
}

pub fn one_point_probability(
    outcomes: &[RadiusOutcome],
    z: Point,
    eps_list: &[f64],
    params: &TvsParams,
) -> Result<Vec<OnePointRow>> {
    let largest = eps_list.iter().copied().fold(0.0, f64::max);
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("eps_list", "radii must be positive"));
    }
    if 1.0 - z.norm() < 2.0 * largest {
        return Err(Error::invalid(
            "z",
            format!("{z} is closer than 2ε = {} to the boundary", 2.0 * largest),
        ));
    }
    let r = disc_conformal_radius(z);
    let law = params.exit_law();
    let d = params.dimension();
    eps_list
        .iter()
        .map(|&eps| {
            let level = (r / eps).ln();
            let hits: Vec<f64> = outcomes
                .iter()
                .map(|o| match o {
                    Some(t) if *t < level => 0.0,
                    _ => 1.0,
                })
                .collect();
            Ok(OnePointRow {
                eps,
                estimate: Estimate::from_samples(&hits),
                leading: params.c_star() * r.powf(d - 2.0) * eps.powf(2.0 - d),
                series: exit_survival(&law, level.max(0.0))?,
            })
        })
        .collect()
}

/// Slope of `log p̂` against `log ε`; rows with `p̂ = 0` are skipped.
pub fn hitting_exponent(rows: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(e, p)| (e.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Degenerate(
            "fewer than two radii with a positive frequency".into(),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(linear_fit(&xs, &ys).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointResult {
    /// `(δ, frequency of d(x, A) ≤ δ and d(y, A) ≤ δ)`.
    pub rows: Vec<(f64, Estimate)>,
    /// Fitted exponent of the frequency in δ.
    pub slope: f64,
    /// `σ²`, the exponent the two-point bound predicts.
    pub predicted: f64,
}

/// Joint hitting frequencies from per-sample distances `(d(x, A), d(y, A))`.
pub fn two_point_probability(
    distances: &[(f64, f64)],
    x: Point,
    y: Point,
    deltas: &[f64],
    params: &TvsParams,
    sigma: f64,
) -> Result<TwoPointResult> {
    let sep = (x - y).norm();
    if let Some(&bad) = deltas.iter().find(|&&d| !(d > 0.0 && d < 0.25 * sep)) {
        return Err(Error::invalid(
            "delta",
            format!("{bad} must lie in (0, |x − y|/4 = {})", 0.25 * sep),
        ));
    }
    let sc = params.sigma_critical();
    if !(sigma > 0.0 && sigma < sc) {
        return Err(Error::SigmaOutOfRange { sigma, limit: sc });
    }
    let rows: Vec<(f64, Estimate)> = deltas
        .iter()
        .map(|&delta| {
            let hits: Vec<f64> = distances
                .iter()
                .map(|&(dx, dy)| if dx <= delta && dy <= delta { 1.0 } else { 0.0 })
                .collect();
            (delta, Estimate::from_samples(&hits))
        })
        .collect();
    let fit: Vec<(f64, f64)> = rows.iter().map(|(d, e)| (*d, e.mean)).collect();
    Ok(TwoPointResult {
        slope: hitting_exponent(&fit).unwrap_or(f64::NAN),
        rows,
        predicted: sigma * sigma,
    })
}
