use serde::{Deserialize, Serialize};

use crate::analytic::quadrature::{gauss_legendre, tanh_sinh_unit};
use crate::analytic::TvsParams;
use crate::geometry::Point;
use crate::lattice::LatticeDomain;
use crate::{Error, Result};

/// Conformal radius as a function on the plane, 0 on the set itself.
#[derive(Debug, Clone, Copy)]
pub enum RadiusField<'a> {
    /// One value per lattice node, each node standing for `h²` of area.
    Lattice {
        domain: &'a LatticeDomain,
        radii: &'a [f64],
    },
    /// `r(z) = dist(z, [from, to])` on the whole plane, integrated exactly
    /// through the lengths of its level curves.
    Segment { from: Point, to: Point },
}

/// Radial profiles `F` for `𝔐_A(F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `F ≡ 1`.
    Unit,
    /// `F_δ(s) = δ s^{−(σ_c−δ)²/2} 1_{(0,1)}(s)`.
    Minkowski { delta: f64, sigma_c: f64 },
    /// `J_u(s) = u^{−σ²/2} 1_{(0,u)}(s)`.
    Window { u: f64, sigma: f64 },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Profile::Unit => 1.0,
            Profile::Minkowski { delta, sigma_c } => {
                if s > 0.0 && s < 1.0 {
                    delta * s.powf(-0.5 * (sigma_c - delta) * (sigma_c - delta))
                } else {
                    0.0
                }
            }
            Profile::Window { u, sigma } => {
                if s > 0.0 && s < u {
                    u.powf(-0.5 * sigma * sigma)
                } else {
                    0.0
                }
            }
        }
    }

    /// End of the support, `None` for unbounded support.
    fn support_end(&self) -> Option<f64> {
        match *self {
            Profile::Unit => None,
            Profile::Minkowski { .. } => Some(1.0),
            Profile::Window { u, .. } => Some(u),
        }
    }
}

/// `(𝔐_A(F), f) = ∫_{𝔻∖A} f(z) F(r(z)) dz`.
pub fn content_functional<G: Fn(Point) -> f64>(field: &RadiusField, profile: &Profile, f: G) -> Result<f64> {
    match *field {
        RadiusField::Lattice { domain, radii } => {
            if radii.len() != domain.node_count() {
                return Err(Error::invalid("radii", "one value per node expected"));
            }
            let h2 = domain.h() * domain.h();
            Ok(radii
                .iter()
                .enumerate()
                .filter(|(_, &r)| r > 0.0)
                .map(|(u, &r)| f(domain.position(u)) * profile.eval(r))
                .sum::<f64>()
                * h2)
        }
        RadiusField::Segment { from, to } => {
            let end = profile
                .support_end()
                .ok_or_else(|| Error::invalid("profile", "the plane has infinite area; use a bounded profile"))?;
            // ∫_0^end F(s) L_f(s) ds, with L_f the f-weighted length of {dist = s}
            tanh_sinh_unit(
                |u, _| Some(profile.eval(end * u) * level_length(from, to, end * u, &f) * end),
                1e-10,
            )
        }
    }
}

/// `∫ f dℓ` over the curve at distance `s` from the segment: two parallel
/// sides and two half circles.
fn level_length<G: Fn(Point) -> f64>(from: Point, to: Point, s: f64, f: &G) -> f64 {
    const ORDER: usize = 24;
    let (x, w) = gauss_legendre(ORDER);
    let dir = to - from;
    let len = dir.norm();
    let unit = dir / len;
    let normal = unit * Point::new(0.0, 1.0);
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let p = from + dir * (0.5 * (xi + 1.0));
        total += 0.5 * len * wi * (f(p + normal * s) + f(p - normal * s));
        // half circle at `to` turns from +normal through +unit, at `from` the other way
        let phi = 0.5 * std::f64::consts::PI * (xi + 1.0);
        let e = Point::from_polar(1.0, phi);
        let cap = normal * Point::new(e.re, -e.im);
        total += 0.5 * std::f64::consts::PI * s * wi * (f(to + cap * s) + f(from - cap * s));
    }
    total
}

/// `μ_δ(f) = δ Σ f(z) r(z)^{−(σ_c−δ)²/2} h²` over component nodes.
pub fn minkowski_measure<G: Fn(Point) -> f64>(
    domain: &LatticeDomain,
    radii: &[f64],
    params: &TvsParams,
    delta: f64,
    f: G,
) -> Result<f64> {
    let sc = params.sigma_critical();
    if !(delta > 0.0 && delta < sc) {
        return Err(Error::invalid("delta", format!("must lie in (0, {sc}), got {delta}")));
    }
    let exponent = 0.5 * (sc - delta) * (sc - delta);
    weighted_radius_sum(domain, radii, delta, exponent, f)
}

/// `scale · Σ f(z) r(z)^{−exponent} h²` over nodes with `r > 0`.
pub(crate) fn weighted_radius_sum<G: Fn(Point) -> f64>(
    domain: &LatticeDomain,
    radii: &[f64],
    scale: f64,
    exponent: f64,
    f: G,
) -> Result<f64> {
    if radii.len() != domain.node_count() {
        return Err(Error::invalid("radii", "one value per node expected"));
    }
    let h2 = domain.h() * domain.h();
    let sum: f64 = radii
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(u, &r)| f(domain.position(u)) * r.powf(-exponent))
        .sum();
    Ok(scale * sum * h2)
}

/// Density values `δ r^{−(σ_c−δ)²/2}` per node (0 on the set).
pub fn minkowski_density(radii: &[f64], params: &TvsParams, delta: f64) -> Vec<f64> {
    let sc = params.sigma_critical();
    let e = 0.5 * (sc - delta) * (sc - delta);
    radii
        .iter()
        .map(|&r| if r > 0.0 { delta * r.powf(-e) } else { 0.0 })
        .collect()
}

/// Two-step Richardson extrapolation for values at `x, x/2, x/4` with an
/// error linear in `x`: returns the extrapolant from the two finest values
/// and the spread against the coarser pair.
pub fn richardson(values: [f64; 3]) -> (f64, f64) {
    let fine = 2.0 * values[2] - values[1];
    let coarse = 2.0 * values[1] - values[0];
    (fine, (fine - coarse).abs())
}
