//! Numerical integration: adaptive Gauss-Kronrod on intervals, double-exponential
//! rules for endpoint singularities, Gauss-Legendre tensor rules on small discs,
//! and the unit-disc integrator used for every continuum target.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::geometry::{Point, Region};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive G7-K15 quadrature of `f` over `[a, b]`.
///
/// Converges when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
/// A non-finite integrand value aborts with `NonConvergence`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    const MAX_PANELS: usize = 2000;
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    loop {
        if !total.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::NonConvergence(format!(
                "error estimate {err:.3e} after {MAX_PANELS} panels on [{a}, {b}]"
            )));
        }
        let p = heap.pop().expect("heap never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::NonConvergence(format!("panel collapsed near {m}")));
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            err: e2,
        });
        // re-sum occasionally to stop cancellation drift in the running totals
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
}

/// Tanh-sinh rule on `[0, 1]` for integrands with endpoint singularities.
///
/// The integrand receives both `u` and `1 - u`, each computed without cancellation,
/// so singular factors like `u^{-s}` can be evaluated accurately near the ends.
/// Nodes where the integrand returns `None` are skipped. Divergence is detected
/// when the contributions at the outermost nodes stop decaying.
pub fn tanh_sinh_unit<F: FnMut(f64, f64) -> Option<f64>>(mut f: F, tol: f64) -> Result<f64> {
    // nodes beyond this underflow in double precision
    const T_MAX: f64 = 6.5;
    const MAX_LEVEL: u32 = 12;

    // contribution of the node at parameter t (already multiplied by its weight)
    let mut term = |t: f64| -> Option<f64> {
        let y = FRAC_PI_2 * t.sinh();
        let dy = FRAC_PI_2 * t.cosh();
        // u = 1/(1+e^{-2y}), 1-u = 1/(1+e^{2y})
        let (u, v) = if y >= 0.0 {
            let e = (-2.0 * y).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = (2.0 * y).exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        if u <= 0.0 || v <= 0.0 {
            return None;
        }
        let w = dy * 2.0 * u * v; // du/dt
        f(u, v).map(|val| val * w)
    };

    let mut h = 1.0;
    let mut sum = 0.0;
    let mut edge: Vec<(f64, f64)> = Vec::new(); // (t, |term|) at the extremes of each side
    let mut k = 0i64;
    loop {
        let t = k as f64 * h;
        if t > T_MAX {
            break;
        }
        for s in if k == 0 { vec![0.0] } else { vec![t, -t] } {
            if let Some(v) = term(s) {
                if !v.is_finite() {
                    return Err(Error::NonConvergence(format!("non-finite integrand at t = {s}")));
                }
                sum += v;
                edge.push((s, v.abs()));
            }
        }
        k += 1;
    }
    let mut estimate = sum * h;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1i64;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            for s in [t, -t] {
                if let Some(v) = term(s) {
                    if !v.is_finite() {
                        return Err(Error::NonConvergence(format!("non-finite integrand at t = {s}")));
                    }
                    add += v;
                    edge.push((s, v.abs()));
                }
            }
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 3 && diff <= tol * estimate.abs().max(1e-300) {
            check_tail_decay(&edge, tol * estimate.abs())?;
            return Ok(estimate);
        }
    }
    Err(Error::NonConvergence(format!(
        "tanh-sinh refinement did not settle (estimate {estimate:.6e})"
    )))
}

// Outermost evaluated contributions on each side must decay; a non-integrable
// endpoint singularity shows up as terms that stay flat or grow toward the end.
fn check_tail_decay(edge: &[(f64, f64)], scale: f64) -> Result<()> {
    for side in [1.0, -1.0] {
        let mut pts: Vec<(f64, f64)> = edge
            .iter()
            .filter(|(t, _)| t * side > 0.0)
            .map(|&(t, v)| (t.abs(), v))
            .collect();
        if pts.len() < 4 {
            continue;
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let n = pts.len();
        let last = pts[n - 1].1;
        let before = pts[n - 1 - (n / 8).max(1)].1;
        if last > 1e-3 * scale.max(1e-12) && last >= before {
            return Err(Error::NonConvergence(
                "integrand does not decay at an endpoint (non-integrable singularity)".into(),
            ));
        }
    }
    Ok(())
}

/// `∫_𝔻 g(z, 1-|z|²) dz`, the second argument supplied without cancellation.
///
/// Radial direction uses tanh-sinh in `u = 1 - r²` (so `dz = ½ du dθ`), the
/// angle uses adaptive Gauss-Kronrod.
pub fn disc_quadrature_radial<G: Fn(Point, f64) -> f64>(g: G, tol: f64) -> Result<f64> {
    let mut failure = None;
    let value = tanh_sinh_unit(
        |u, one_minus_u| {
            let r = one_minus_u.sqrt();
            match integrate(|th| g(Point::from_polar(r, th), u), 0.0, TAU, 0.1 * tol, 0.1 * tol) {
                Ok(v) => Some(0.5 * v),
                Err(e) => {
                    failure.get_or_insert(e);
                    Some(f64::NAN)
                }
            }
        },
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => value,
    }
}

/// `∫_𝔻 f dz` for an integrand with at most an integrable singularity at `|z| = 1`.
///
/// Nodes so close to the circle that `1 - |z|²` rounds to zero are skipped.
pub fn disc_quadrature<F: Fn(Point) -> f64>(f: F, tol: f64) -> Result<f64> {
    let mut failure = None;
    let value = tanh_sinh_unit(
        |u, one_minus_u| {
            let r = one_minus_u.sqrt();
            if r * r >= 1.0 {
                return None;
            }
            if u < 1e-8 {
                // 1 - |z|² is dominated by rounding here; an adaptive rule would chase the noise
                const M: usize = 64;
                let s: f64 = (0..M).map(|j| f(Point::from_polar(r, TAU * j as f64 / M as f64))).sum();
                return Some(0.5 * s * TAU / M as f64);
            }
            match integrate(|th| f(Point::from_polar(r, th)), 0.0, TAU, 0.1 * tol, 0.1 * tol) {
                Ok(v) => Some(0.5 * v),
                Err(e) => {
                    failure.get_or_insert(e);
                    Some(f64::NAN)
                }
            }
        },
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => value,
    }
}

/// Adaptive polar integral of a smooth integrand over a region, about its center.
pub fn region_quadrature<F: Fn(Point) -> f64>(region: &Region, f: F, tol: f64) -> Result<f64> {
    let c = region.center();
    let (r0, r1) = match *region {
        Region::Disc { radius, .. } => (0.0, radius),
        Region::Annulus { inner, outer, .. } => (inner, outer),
    };
    integrate(
        |r| {
            let ring = integrate(|th| f(c + Point::from_polar(r, th)), 0.0, TAU, 0.1 * tol, 0.1 * tol);
            ring.map(|v| v * r).unwrap_or(f64::NAN)
        },
        r0,
        r1,
        tol,
        tol,
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed tensor rule on a disc region: Gauss-Legendre in the radius (with the
/// `r dr` Jacobian) and the periodic trapezoid rule in the angle.
pub fn disc_rule(region: &Region, radial: usize, angular: usize) -> Vec<(Point, f64)> {
    let c = region.center();
    let (r0, r1) = match *region {
        Region::Disc { radius, .. } => (0.0, radius),
        Region::Annulus { inner, outer, .. } => (inner, outer),
    };
    let (x, w) = gauss_legendre(radial);
    let mut out = Vec::with_capacity(radial * angular);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * xi;
        let wr = 0.5 * (r1 - r0) * wi * r * TAU / angular as f64;
        for j in 0..angular {
            let th = TAU * (j as f64 + 0.5) / angular as f64;
            out.push((c + Point::from_polar(r, th), wr));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn gk_polynomial_and_sqrt() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        // ∫ u^{-1/2} = 2, ∫ (1-u)^{-3/4} = 4
        let v = tanh_sinh_unit(|u, _| Some(u.powf(-0.5)), 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let v = tanh_sinh_unit(|_, w| Some(w.powf(-0.75)), 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn tanh_sinh_flags_divergence() {
        assert!(tanh_sinh_unit(|u, _| Some(1.0 / u), 1e-8).is_err());
        assert!(tanh_sinh_unit(|u, _| Some(u.powf(-1.2)), 1e-8).is_err());
    }

    #[test]
    fn disc_area_and_radial_powers() {
        let v = disc_quadrature(|_| 1.0, DEFAULT_TOL).unwrap();
        assert!((v - PI).abs() < 1e-8);
        let v = disc_quadrature(|z| (1.0 - z.norm_sqr()).powf(-0.5), DEFAULT_TOL).unwrap();
        assert!((v - TAU).abs() < 1e-6, "{v}");
        let v = disc_quadrature_radial(|_, u| u.powf(-0.5), DEFAULT_TOL).unwrap();
        assert!((v - TAU).abs() < 1e-8, "{v}");
        assert!(disc_quadrature_radial(|_, u| u.powf(-1.0), DEFAULT_TOL).is_err());
    }

    #[test]
    fn disc_non_radial_integrand() {
        // ∫_𝔻 x² dz = π/4
        let v = disc_quadrature(|z| z.re * z.re, DEFAULT_TOL).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_rule_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-13);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn small_disc_rules_agree() {
        let reg = Region::disc(point(0.2, -0.1), 0.15);
        let f = |z: Point| (z.re * 3.0).exp() * (1.0 + z.im * z.im);
        let tensor: f64 = disc_rule(&reg, 10, 24).iter().map(|(z, w)| w * f(*z)).sum();
        let adaptive = region_quadrature(&reg, f, 1e-11).unwrap();
        assert!((tensor - adaptive).abs() < 1e-10 * adaptive.abs());
        let area: f64 = disc_rule(&reg, 3, 8).iter().map(|(_, w)| w).sum();
        assert!((area - reg.area()).abs() < 1e-14);
    }
}
