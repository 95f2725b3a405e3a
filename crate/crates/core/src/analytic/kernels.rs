use crate::geometry::Point;
use crate::{Error, Result};

/// Green's function and conformal radius of a planar domain.
pub trait GreenKernel {
    fn green(&self, z: Point, w: Point) -> Result<f64>;
    fn conformal_radius(&self, z: Point) -> Result<f64>;
}

/// The unit disc with its closed-form kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitDisc;

impl GreenKernel for UnitDisc {
    fn green(&self, z: Point, w: Point) -> Result<f64> {
        disc_green(z, w)
    }

    fn conformal_radius(&self, z: Point) -> Result<f64> {
        if z.norm() >= 1.0 {
            return Err(Error::invalid("z", format!("{z} is not inside the unit disc")));
        }
        Ok(disc_conformal_radius(z))
    }
}

/// `log|1 − z w̄| − log|z − w|`.
pub fn disc_green(z: Point, w: Point) -> Result<f64> {
    if z.norm() >= 1.0 || w.norm() >= 1.0 {
        return Err(Error::invalid(
            "z, w",
            format!("{z}, {w} must lie inside the unit disc"),
        ));
    }
    let d = (z - w).norm();
    if d == 0.0 {
        return Err(Error::CoincidentPoints(format!("{z}")));
    }
    Ok((1.0 - z * w.conj()).norm().ln() - d.ln())
}

/// `1 − |z|²`, meaningful for `|z| < 1`.
pub fn disc_conformal_radius(z: Point) -> f64 {
    1.0 - z.norm_sqr()
}

/// n-point correlation of the imaginary chaos with charges `+σ` at `xs` and `−σ` at `ys`.
pub fn correlation<K: GreenKernel + ?Sized>(kernel: &K, xs: &[Point], ys: &[Point], sigma: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let mut log = 0.0;
    for z in xs.iter().chain(ys) {
        log -= 0.5 * s2 * kernel.conformal_radius(*z)?.ln();
    }
    for group in [xs, ys] {
        for (i, p) in group.iter().enumerate() {
            for q in &group[i + 1..] {
                log -= s2 * kernel.green(*p, *q)?;
            }
        }
    }
    for x in xs {
        for y in ys {
            log += s2 * kernel.green(*x, *y)?;
        }
    }
    Ok(log.exp())
}

/// The four three-point correlations entering the cosine triple moment:
/// all charges positive, then the charge at `z`, `y`, `x` flipped in turn.
pub fn three_point_terms<K: GreenKernel + ?Sized>(
    kernel: &K,
    x: Point,
    y: Point,
    z: Point,
    sigma: f64,
) -> Result<[f64; 4]> {
    let radii = kernel.conformal_radius(x)? * kernel.conformal_radius(y)? * kernel.conformal_radius(z)?;
    let prefactor = radii.powf(-0.5 * sigma * sigma);
    Ok(three_point_from_greens(
        prefactor,
        kernel.green(x, y)?,
        kernel.green(x, z)?,
        kernel.green(y, z)?,
        sigma,
    ))
}

pub(crate) fn three_point_from_greens(prefactor: f64, gxy: f64, gxz: f64, gyz: f64, sigma: f64) -> [f64; 4] {
    let s2 = sigma * sigma;
    [
        prefactor * (-s2 * (gxy + gxz + gyz)).exp(),
        prefactor * (s2 * (gxz + gyz - gxy)).exp(),
        prefactor * (s2 * (gxy + gyz - gxz)).exp(),
        prefactor * (s2 * (gxy + gxz - gyz)).exp(),
    ]
}

/// Twice the sum of the four three-point correlations.
pub fn h_sigma_kernel<K: GreenKernel + ?Sized>(kernel: &K, x: Point, y: Point, z: Point, sigma: f64) -> Result<f64> {
    Ok(2.0 * three_point_terms(kernel, x, y, z, sigma)?.iter().sum::<f64>())
}
