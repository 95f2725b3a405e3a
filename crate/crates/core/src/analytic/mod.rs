//! Closed-form constants, series and kernels. Every Monte Carlo experiment is
//! compared against values produced here.

mod exit;
mod kernels;
mod measure;
pub mod quadrature;

pub use exit::{exit_laplace, exit_survival, ExitLaw};
pub(crate) use kernels::three_point_from_greens;
pub use kernels::{
    correlation, disc_conformal_radius, disc_green, h_sigma_kernel, three_point_terms, GreenKernel, UnitDisc,
};
pub use measure::{expected_measure_mass, integrate_radius_power};
pub use quadrature::{disc_quadrature, disc_quadrature_radial, DEFAULT_TOL};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Height of the level lines in field units.
pub const LAMBDA: f64 = PI / 2.0;

/// Levels `-a` and `b` of a two-valued set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvsParams {
    a: f64,
    b: f64,
}

impl TvsParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", format!("must be positive and finite, got {a}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid("b", format!("must be positive and finite, got {b}")));
        }
        // tolerate rounding in inputs like a = b = π/2
        if a + b < 2.0 * LAMBDA * (1.0 - 4.0 * f64::EPSILON) {
            return Err(Error::BelowExistenceThreshold {
                a,
                b,
                threshold: 2.0 * LAMBDA,
            });
        }
        Ok(TvsParams { a, b })
    }

    /// Levels given in multiples of the level-line height.
    pub fn in_lambda_units(a: f64, b: f64) -> Result<Self> {
        Self::new(a * LAMBDA, b * LAMBDA)
    }

    /// Symmetric levels `-a, a`.
    pub fn symmetric(a: f64) -> Result<Self> {
        Self::new(a, a)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda(&self) -> f64 {
        LAMBDA
    }

    pub fn width(&self) -> f64 {
        self.a + self.b
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == self.b
    }

    pub fn dimension(&self) -> f64 {
        2.0 - 2.0 * LAMBDA * LAMBDA / (self.width() * self.width())
    }

    pub fn sigma_critical(&self) -> f64 {
        2.0 * LAMBDA / self.width()
    }

    pub fn c_star(&self) -> f64 {
        4.0 / PI * (PI * self.a / self.width()).sin()
    }

    /// Boundary value that centres the band: with it, levels `-a, b` sit at
    /// `∓(a+b)/2` relative to the boundary.
    pub fn centring_shift(&self) -> f64 {
        (self.a - self.b) / 2.0
    }

    pub fn exit_law(&self) -> ExitLaw {
        ExitLaw::new(self)
    }

    /// Does the band of `self` sit inside the band of `other`?
    pub fn band_within(&self, other: &TvsParams) -> bool {
        self.a <= other.a && self.b <= other.b
    }
}

/// Box-counting dimension of the two-valued set.
pub fn dimension(params: &TvsParams) -> f64 {
    params.dimension()
}

pub fn sigma_critical(params: &TvsParams) -> f64 {
    params.sigma_critical()
}

pub fn c_star(params: &TvsParams) -> f64 {
    params.c_star()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_values() {
        let ale = TvsParams::symmetric(LAMBDA).unwrap();
        assert_eq!(dimension(&ale), 1.5);
        let cle = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
        assert_eq!(dimension(&cle), 1.875);
        let xor = TvsParams::symmetric(2.0 * 2f64.sqrt() * LAMBDA).unwrap();
        assert!((dimension(&xor) - 31.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_critical_values() {
        assert_eq!(sigma_critical(&TvsParams::symmetric(LAMBDA).unwrap()), 1.0);
        assert_eq!(sigma_critical(&TvsParams::symmetric(2.0 * LAMBDA).unwrap()), 0.5);
        assert_eq!(sigma_critical(&TvsParams::new(LAMBDA, 3.0 * LAMBDA).unwrap()), 0.5);
    }

    #[test]
    fn c_star_values() {
        let p = TvsParams::symmetric(3.0).unwrap();
        assert!((c_star(&p) - 4.0 / PI).abs() < 1e-15);
        let p = TvsParams::new(LAMBDA, 3.0 * LAMBDA).unwrap();
        assert!((c_star(&p) - 2.0 * 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((c_star(&p) - 0.90032).abs() < 1e-5);
        let p = TvsParams::new(1e-9, 10.0).unwrap();
        assert!(c_star(&p) < 1e-9);
    }

    #[test]
    fn rejects_invalid_levels() {
        assert!(matches!(
            TvsParams::new(1.0, 1.0),
            Err(Error::BelowExistenceThreshold { .. })
        ));
        assert!(TvsParams::new(-1.0, 5.0).is_err());
        assert!(TvsParams::new(3.0, f64::NAN).is_err());
        assert!(TvsParams::new(LAMBDA, LAMBDA).is_ok());
    }

    proptest! {
        #[test]
        fn dimension_matches_critical_exponent(a in 0.01f64..20.0, extra in 0.0f64..20.0) {
            let b = (2.0 * LAMBDA - a).max(0.01) + extra;
            let p = TvsParams::new(a, b).unwrap();
            let s = p.sigma_critical();
            prop_assert!((p.dimension() - (2.0 - s * s / 2.0)).abs() < 1e-14);
            prop_assert!(p.dimension() >= 1.5 && p.dimension() < 2.0);
            prop_assert!(s > 0.0 && s <= 1.0);
        }
    }
}
