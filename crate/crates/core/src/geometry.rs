//! Points and simple planar regions used as test-function supports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of the plane, stored as a complex number.
pub type Point = Complex64;

pub fn point(x: f64, y: f64) -> Point {
    Complex64::new(x, y)
}

/// Support of an indicator test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Disc { center: (f64, f64), radius: f64 },
    Annulus { center: (f64, f64), inner: f64, outer: f64 },
}

impl Region {
    pub fn disc(center: Point, radius: f64) -> Self {
        Region::Disc {
            center: (center.re, center.im),
            radius,
        }
    }

    pub fn annulus(center: Point, inner: f64, outer: f64) -> Self {
        Region::Annulus {
            center: (center.re, center.im),
            inner,
            outer,
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            Region::Disc { center, .. } | Region::Annulus { center, .. } => point(center.0, center.1),
        }
    }

    /// Largest distance from the center to a point of the region.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Region::Disc { radius, .. } => radius,
            Region::Annulus { outer, .. } => outer,
        }
    }

    pub fn contains(&self, z: Point) -> bool {
        let r = (z - self.center()).norm();
        match *self {
            Region::Disc { radius, .. } => r < radius,
            Region::Annulus { inner, outer, .. } => r >= inner && r < outer,
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Region::Disc { radius, .. } => PI * radius * radius,
            Region::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
        }
    }

    /// Supremum of |z| over the region.
    pub fn max_modulus(&self) -> f64 {
        self.center().norm() + self.outer_radius()
    }

    /// Lower bound on the distance between two regions (0 when they may touch).
    pub fn gap(&self, other: &Region) -> f64 {
        let d = (self.center() - other.center()).norm();
        let direct = d - self.outer_radius() - other.outer_radius();
        // a disc sitting in the hole of an annulus
        let nested = |a: &Region, b: &Region| match *a {
            Region::Annulus { inner, .. } => inner - d - b.outer_radius(),
            Region::Disc { .. } => f64::NEG_INFINITY,
        };
        direct.max(nested(self, other)).max(nested(other, self)).max(0.0)
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            Region::Disc { radius, .. } => radius > 0.0 && radius.is_finite(),
            Region::Annulus { inner, outer, .. } => inner >= 0.0 && outer > inner && outer.is_finite(),
        };
        if ok && self.max_modulus() < 1.0 {
            Ok(())
        } else {
            Err(crate::Error::invalid(
                "region",
                format!("{self:?} must be non-empty and compactly contained in the unit disc"),
            ))
        }
    }
}
