use super::quadrature::disc_quadrature_radial;
use super::{exit_laplace, TvsParams};
use crate::geometry::Point;
use crate::{Error, Result};

/// `∫_𝔻 f(z) (1−|z|²)^{−s} dz`.
pub fn integrate_radius_power<F: Fn(Point) -> f64>(f: F, s: f64, tol: f64) -> Result<f64> {
    if s >= 1.0 {
        return Err(Error::NonConvergence(format!(
            "(1-|z|^2)^(-{s}) is not integrable on the disc"
        )));
    }
    disc_quadrature_radial(|z, u| f(z) * u.powf(-s), tol)
}

/// Expected mass `E[μ_δ(f)]` of the Minkowski-content measure.
///
/// For `δ > 0` this is exact: the conformal radius law turns the density into
/// a Laplace transform of the exit time. `δ = 0` gives the limiting constant.
pub fn expected_measure_mass<F: Fn(Point) -> f64>(params: &TvsParams, delta: f64, f: F, tol: f64) -> Result<f64> {
    let sc = params.sigma_critical();
    if !(delta >= 0.0 && delta < sc) {
        return Err(Error::invalid("delta", format!("must lie in [0, {sc}), got {delta}")));
    }
    if delta == 0.0 {
        let w = params.width();
        let pref = 2.0 / w * (std::f64::consts::PI * params.a() / w).sin();
        return Ok(pref * integrate_radius_power(f, 0.5 * sc * sc, tol)?);
    }
    let sp = sc - delta;
    let laplace = exit_laplace(params, sp, 0.0)?;
    Ok(delta * laplace * integrate_radius_power(f, 0.5 * sp * sp, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{DEFAULT_TOL, LAMBDA};
    use std::f64::consts::PI;

    #[test]
    fn radial_power_closed_form() {
        for s in [0.0, 0.125, 0.5, 0.9] {
            let v = integrate_radius_power(|_| 1.0, s, DEFAULT_TOL).unwrap();
            assert!((v - PI / (1.0 - s)).abs() < 1e-7 * v, "{s}: {v}");
        }
        assert!(integrate_radius_power(|_| 1.0, 1.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn limit_mass_for_carpet_levels() {
        let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
        let m = expected_measure_mass(&p, 0.0, |_| 1.0, DEFAULT_TOL).unwrap();
        let target = (1.0 / (2.0 * LAMBDA)) * PI * 8.0 / 7.0;
        assert!((m - target).abs() < 1e-8 * target);
    }

    #[test]
    fn finite_delta_tends_to_limit() {
        let p = TvsParams::new(LAMBDA, 2.0 * LAMBDA).unwrap();
        let limit = expected_measure_mass(&p, 0.0, |_| 1.0, DEFAULT_TOL).unwrap();
        let mut prev_err = f64::INFINITY;
        for delta in [0.1, 0.01, 0.001] {
            let m = expected_measure_mass(&p, delta, |_| 1.0, DEFAULT_TOL).unwrap();
            let err = (m - limit).abs();
            assert!(err < prev_err);
            assert!(err < 3.0 * delta * limit, "{delta}: {m} vs {limit}");
            prev_err = err;
        }
    }

    #[test]
    fn mass_vanishes_with_extreme_asymmetry() {
        let a = LAMBDA;
        let mut prev = f64::INFINITY;
        for b in [10.0, 100.0, 1000.0] {
            let p = TvsParams::new(a, b).unwrap();
            let m = expected_measure_mass(&p, 0.0, |_| 1.0, DEFAULT_TOL).unwrap();
            assert!(m < prev);
            prev = m;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn rejects_delta_outside_range() {
        let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
        assert!(expected_measure_mass(&p, 0.5, |_| 1.0, DEFAULT_TOL).is_err());
        assert!(expected_measure_mass(&p, -0.1, |_| 1.0, DEFAULT_TOL).is_err());
    }
}
