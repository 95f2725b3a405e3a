use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::{GffSample, LatticeDomain, FIELD_SCALE};
use crate::geometry::{point, Point};
use crate::{Error, Result};

/// Smallest circle radius, in lattice spacings, accepted for averaging.
pub const MIN_EPS_SPACINGS: f64 = 3.0;

/// Number of sample points on a circle of radius `eps`.
pub fn circle_points(h: f64, eps: f64) -> usize {
    ((TAU * eps / h).ceil() as usize).max(32)
}

fn check_eps(h: f64, eps: f64) -> Result<()> {
    if !(eps >= MIN_EPS_SPACINGS * h * (1.0 - 1e-12)) {
        return Err(Error::EpsTooSmall {
            eps,
            min_mult: MIN_EPS_SPACINGS,
            min: MIN_EPS_SPACINGS * h,
        });
    }
    Ok(())
}

// Bilinear weights of the four grid points around `p` (lattice units).
fn bilinear(p: Point) -> [((i64, i64), f64); 4] {
    let (fi, fj) = (p.re.floor(), p.im.floor());
    let (tx, ty) = (p.re - fi, p.im - fj);
    let (i, j) = (fi as i64, fj as i64);
    [
        ((i, j), (1.0 - tx) * (1.0 - ty)),
        ((i + 1, j), tx * (1.0 - ty)),
        ((i, j + 1), (1.0 - tx) * ty),
        ((i + 1, j + 1), tx * ty),
    ]
}

/// Mean of the bilinearly interpolated field on the circle `|w − z| = eps`.
pub fn circle_average(domain: &LatticeDomain, sample: &GffSample, z: Point, eps: f64) -> Result<f64> {
    check_eps(domain.h(), eps)?;
    if 1.0 - z.norm() <= eps {
        return Err(Error::CircleOutsideDomain { x: z.re, y: z.im, eps });
    }
    let h = domain.h();
    let m = circle_points(h, eps);
    let mut sum = 0.0;
    for k in 0..m {
        let w = z + Point::from_polar(eps, TAU * k as f64 / m as f64);
        let p = point((w.re + 1.0) / h, (w.im + 1.0) / h);
        for ((i, j), wt) in bilinear(p) {
            if wt != 0.0 {
                sum += wt * sample.grid_value(domain, i, j);
            }
        }
    }
    Ok(sum / m as f64)
}

/// Circle average around a grid point as fixed weights on nearby grid offsets.
#[derive(Debug, Clone)]
pub struct CircleStencil {
    eps: f64,
    taps: Vec<(i64, i64, f64)>,
}

impl CircleStencil {
    pub fn new(domain: &LatticeDomain, eps: f64) -> Result<Self> {
        let h = domain.h();
        check_eps(h, eps)?;
        let m = circle_points(h, eps);
        let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for k in 0..m {
            let p = Point::from_polar(eps / h, TAU * k as f64 / m as f64);
            for (ij, wt) in bilinear(p) {
                if wt != 0.0 {
                    *acc.entry(ij).or_default() += wt / m as f64;
                }
            }
        }
        Ok(CircleStencil {
            eps,
            taps: acc.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn taps(&self) -> &[(i64, i64, f64)] {
        &self.taps
    }

    /// Can the circle around this node be averaged (circle inside the disc)?
    pub fn admissible(&self, domain: &LatticeDomain, node: usize) -> bool {
        domain.position(node).norm() + self.eps < 1.0
    }

    pub fn average_at(&self, domain: &LatticeDomain, sample: &GffSample, node: usize) -> f64 {
        let (i, j) = domain.grid_coords(node);
        self.taps
            .iter()
            .map(|&(di, dj, w)| w * sample.grid_value(domain, i + di, j + dj))
            .sum()
    }

    /// Same as [`average_at`](Self::average_at) on a bare zero-boundary node vector.
    pub fn average_values(&self, domain: &LatticeDomain, values: &[f64], node: usize) -> f64 {
        let (i, j) = domain.grid_coords(node);
        self.taps
            .iter()
            .filter_map(|&(di, dj, w)| domain.node_at(i + di, j + dj).map(|v| w * values[v]))
            .sum()
    }

    /// Exact variance of the circle average of the zero-boundary field at `node`.
    pub fn variance_at(&self, domain: &LatticeDomain, node: usize) -> f64 {
        let (i, j) = domain.grid_coords(node);
        let mut w = vec![0.0; domain.node_count()];
        for &(di, dj, wt) in &self.taps {
            if let Some(v) = domain.node_at(i + di, j + dj) {
                w[v] += wt;
            }
        }
        let mut x = w.clone();
        domain.full().solve_in_place(&mut x);
        FIELD_SCALE * w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn centre_node(domain: &LatticeDomain) -> Result<usize> {
    domain
        .nearest_node(Point::new(0.0, 0.0))
        .ok_or_else(|| Error::Degenerate("no lattice node near the origin".into()))
}

/// Lattice offset in `Var Γ_ε(z) = log(1/ε) + log r(z) + κ_ε` at the centre node.
pub fn circle_kappa(domain: &LatticeDomain, eps: f64) -> Result<f64> {
    let stencil = CircleStencil::new(domain, eps)?;
    let c = centre_node(domain)?;
    let r = 1.0 - domain.position(c).norm_sqr();
    Ok(stencil.variance_at(domain, c) - (1.0 / eps).ln() - r.ln())
}

/// Offset in `Var Γ(z) = log(1/h) + log r(z) + κ` for the point value at the centre node.
pub fn pointwise_kappa(domain: &LatticeDomain) -> Result<f64> {
    let c = centre_node(domain)?;
    let r = 1.0 - domain.position(c).norm_sqr();
    Ok(domain.discrete_green(c, c) - (1.0 / domain.h()).ln() - r.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;

    #[test]
    fn constant_field_averages_to_constant() {
        let d = LatticeDomain::new(64).unwrap();
        let s = GffSample::zero(&d).with_boundary_shift(1.75);
        let v = circle_average(&d, &s, point(0.1, 0.2), 0.2).unwrap();
        assert!((v - 1.75).abs() < 1e-13);
        let st = CircleStencil::new(&d, 0.2).unwrap();
        let total: f64 = st.taps().iter().map(|t| t.2).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_circles() {
        let d = LatticeDomain::new(64).unwrap();
        let s = GffSample::zero(&d);
        assert!(matches!(
            circle_average(&d, &s, point(0.0, 0.0), 2.0 * d.h()),
            Err(Error::EpsTooSmall { .. })
        ));
        assert!(matches!(
            circle_average(&d, &s, point(0.85, 0.0), 0.2),
            Err(Error::CircleOutsideDomain { .. })
        ));
    }

    #[test]
    fn average_is_linear() {
        let d = LatticeDomain::new(64).unwrap();
        let a = d.sample_gff(&mut task_rng(1, 0));
        let b = d.sample_gff(&mut task_rng(1, 1));
        let sum: Vec<f64> = a
            .fluctuation()
            .iter()
            .zip(b.fluctuation())
            .map(|(x, y)| x + y)
            .collect();
        let c = GffSample::from_values(&d, sum, 0.0).unwrap();
        let z = point(-0.2, 0.3);
        let lhs = circle_average(&d, &c, z, 0.15).unwrap();
        let rhs = circle_average(&d, &a, z, 0.15).unwrap() + circle_average(&d, &b, z, 0.15).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn stencil_matches_direct_average_at_nodes() {
        let d = LatticeDomain::new(64).unwrap();
        let s = d.sample_gff(&mut task_rng(3, 0));
        let st = CircleStencil::new(&d, 0.1).unwrap();
        let node = d.nearest_node(point(0.25, -0.25)).unwrap();
        let direct = circle_average(&d, &s, d.position(node), 0.1).unwrap();
        assert!((st.average_at(&d, &s, node) - direct).abs() < 1e-12);
    }

    #[test]
    fn pointwise_kappa_near_lattice_constant() {
        // Euler's constant plus (3/2) log 2 for the square lattice
        let d = LatticeDomain::new(256).unwrap();
        let k = pointwise_kappa(&d).unwrap();
        assert!((k - (0.577_215_664_901_532_9 + 1.5 * 2f64.ln())).abs() < 0.01, "{k}");
    }

    #[test]
    fn circle_kappa_is_small_for_resolved_circles() {
        let d = LatticeDomain::new(256).unwrap();
        let k = circle_kappa(&d, 0.1).unwrap();
        assert!(k.abs() < 0.05, "{k}");
    }
}
