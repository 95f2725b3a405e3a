//! Quadrature values of the chaos moments in the unit disc.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::quadrature::{disc_rule, gauss_legendre, region_quadrature};
use crate::analytic::{disc_conformal_radius, h_sigma_kernel, UnitDisc, DEFAULT_TOL};
use crate::geometry::Region;
use crate::{Error, Result};

/// `∫_U r_𝔻^{−σ²/2}`.
pub fn one_point_target(region: &Region, sigma: f64) -> Result<f64> {
    region.validate()?;
    let e = -0.5 * sigma * sigma;
    region_quadrature(region, |z| disc_conformal_radius(z).powf(e), DEFAULT_TOL)
}

/// `∬_{U×U} r(x)^{−σ²/2} r(y)^{−σ²/2} e^{σ²G(x,y)}` for a disc `U`.
pub fn two_point_target(region: &Region, sigma: f64) -> Result<f64> {
    two_point_rule(region, sigma, 24, 24)
}

// Inner integral in polar coordinates about x, with ρ = R(θ)·u^{1/(2−σ²)} so
// the |x − y|^{−σ²} singularity becomes a smooth integrand in u.
pub(crate) fn two_point_rule(region: &Region, sigma: f64, outer: usize, inner: usize) -> Result<f64> {
    let Region::Disc { radius, .. } = *region else {
        return Err(Error::invalid("region", "the pair integral is implemented for discs"));
    };
    region.validate()?;
    let c = region.center();
    let s2 = sigma * sigma;
    let p = 2.0 - s2;
    let (gx, gw) = gauss_legendre(inner);
    let angular = 2 * inner;
    let rays: Vec<Complex64> = (0..angular)
        .map(|k| Complex64::from_polar(1.0, TAU * (k as f64 + 0.5) / angular as f64))
        .collect();
    let outer_pts = disc_rule(region, outer, 2 * outer);
    let total: Vec<f64> = outer_pts
        .par_iter()
        .map(|&(x, wx)| {
            let dx = x - c;
            let mut acc = 0.0;
            for e in &rays {
                let proj = dx.re * e.re + dx.im * e.im;
                let reach = -proj + (proj * proj + radius * radius - dx.norm_sqr()).sqrt();
                let mut line = 0.0;
                for (u, wu) in gx.iter().zip(&gw) {
                    let rho = reach * (0.5 * (u + 1.0)).powf(1.0 / p);
                    let y = x + e * rho;
                    line += 0.5 * wu * disc_conformal_radius(y).powf(-0.5 * s2) * (1.0 - x * y.conj()).norm().powf(s2);
                }
                acc += line * reach.powf(p) / p;
            }
            wx * disc_conformal_radius(x).powf(-0.5 * s2) * acc * TAU / angular as f64
        })
        .collect();
    Ok(total.iter().sum())
}

/// `∭_{U×V×W} H_𝔻^σ` by a product Gauss rule; the regions must be disjoint.
pub fn triple_target(regions: &[Region; 3], sigma: f64) -> Result<f64> {
    triple_rule(regions, sigma, 8)
}

pub(crate) fn triple_rule(regions: &[Region; 3], sigma: f64, order: usize) -> Result<f64> {
    for r in regions {
        r.validate()?;
    }
    let [u, v, w] = regions.map(|r| disc_rule(&r, order, 2 * order));
    let parts: Vec<Result<f64>> = u
        .par_iter()
        .map(|&(x, wx)| {
            let mut acc = 0.0;
            for &(y, wy) in &v {
                for &(z, wz) in &w {
                    acc += wy * wz * h_sigma_kernel(&UnitDisc, x, y, z, sigma)?;
                }
            }
            Ok(wx * acc)
        })
        .collect();
    parts.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::disc_green;
    use crate::geometry::{point, Point};
    use crate::rng::task_rng;
    use crate::stats::Estimate;
    use rand::Rng;

    fn uniform_in(region: &Region, rng: &mut impl Rng) -> Point {
        let r = region.outer_radius() * rng.random::<f64>().sqrt();
        region.center() + Complex64::from_polar(r, TAU * rng.random::<f64>())
    }

    #[test]
    fn one_point_closed_form_at_origin() {
        // ∫_{|z|<ρ} (1 − |z|²)^{−s} = π (1 − (1 − ρ²)^{1−s}) / (1 − s)
        let (rho, sigma) = (0.3f64, 0.5f64);
        let s = 0.5 * sigma * sigma;
        let exact = std::f64::consts::PI * (1.0 - (1.0 - rho * rho).powf(1.0 - s)) / (1.0 - s);
        let v = one_point_target(&Region::disc(point(0.0, 0.0), rho), sigma).unwrap();
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn pair_rule_converges() {
        let u = Region::disc(point(0.1, -0.05), 0.3);
        let a = two_point_rule(&u, 0.5, 24, 24).unwrap();
        let b = two_point_rule(&u, 0.5, 40, 40).unwrap();
        assert!((a - b).abs() < 1e-6 * b, "{a} {b}");
    }

    #[test]
    fn pair_rule_small_sigma_is_area_squared() {
        let u = Region::disc(point(0.0, 0.2), 0.25);
        let v = two_point_target(&u, 1e-6).unwrap();
        assert!((v - u.area() * u.area()).abs() < 1e-6);
    }

    // Independent oracle: plain Monte Carlo over uniform pairs; the integrand
    // has finite variance for σ² < 1.
    #[test]
    fn pair_rule_matches_monte_carlo() {
        let u = Region::disc(point(0.0, 0.0), 0.3);
        let sigma = 0.5;
        let s2 = sigma * sigma;
        let mut rng = task_rng(11, 0);
        let vals: Vec<f64> = (0..400_000)
            .map(|_| {
                let x = uniform_in(&u, &mut rng);
                let y = uniform_in(&u, &mut rng);
                let g = disc_green(x, y).unwrap();
                (disc_conformal_radius(x) * disc_conformal_radius(y)).powf(-0.5 * s2) * (s2 * g).exp()
            })
            .collect();
        let est = Estimate::from_samples(&vals);
        let target = two_point_target(&u, sigma).unwrap() / (u.area() * u.area());
        assert!(est.within(target, 4.0), "{} ± {} vs {target}", est.mean, est.se);
    }

    #[test]
    fn triple_small_sigma_and_monte_carlo() {
        let r = [
            Region::disc(point(0.4, 0.0), 0.08),
            Region::disc(point(-0.2, 0.35), 0.08),
            Region::disc(point(-0.2, -0.35), 0.08),
        ];
        let a = r[0].area();
        let v = triple_target(&r, 1e-6).unwrap();
        assert!((v - 8.0 * a * a * a).abs() < 1e-9);
        let t8 = triple_rule(&r, 0.5, 8).unwrap();
        let t12 = triple_rule(&r, 0.5, 12).unwrap();
        assert!((t8 - t12).abs() < 1e-10 * t12);
        let mut rng = task_rng(12, 0);
        let vals: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = r.map(|q| uniform_in(&q, &mut rng));
                h_sigma_kernel(&UnitDisc, p[0], p[1], p[2], 0.5).unwrap()
            })
            .collect();
        let est = Estimate::from_samples(&vals);
        assert!(est.within(t8 / (a * a * a), 4.0));
    }

    #[test]
    fn annulus_pair_refused() {
        let r = Region::annulus(point(0.0, 0.0), 0.1, 0.3);
        assert!(two_point_target(&r, 0.5).is_err());
    }
}
