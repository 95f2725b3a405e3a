use std::f64::consts::PI;

use super::{TvsParams, LAMBDA};
use crate::{Error, Result};

/// Default truncation tolerance of the survival series for `t > 0`.
pub const SERIES_TOL: f64 = 1e-12;
/// Terms used at `t = 0`, where the series only converges conditionally.
pub const TERMS_AT_ZERO: usize = 10_000;

/// Exit time of Brownian motion from `(0, L)` started at `x0`, through its
/// sine-series survival function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitLaw {
    length: f64,
    start: f64,
}

impl ExitLaw {
    /// Interval `(0, (a+b)π/2λ)` started at `aπ/2λ`.
    pub fn new(params: &TvsParams) -> Self {
        let scale = PI / (2.0 * LAMBDA);
        ExitLaw {
            length: params.width() * scale,
            start: params.a() * scale,
        }
    }

    pub fn from_interval(length: f64, start: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("length", format!("must be positive, got {length}")));
        }
        if !(start > 0.0 && start < length) {
            return Err(Error::invalid(
                "start",
                format!("must lie in (0, {length}), got {start}"),
            ));
        }
        Ok(ExitLaw { length, start })
    }

    pub fn interval_length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        k as f64 * PI / self.length
    }

    /// Sine coefficient of the constant 1 on `(0, L)`.
    pub fn coefficient(&self, k: usize) -> f64 {
        if k.is_multiple_of(2) {
            0.0
        } else {
            4.0 / (k as f64 * PI)
        }
    }

    /// Gap between the first two decay rates, `(λ₂² − λ₁²)/2`.
    pub fn remainder_exponent(&self) -> f64 {
        let (l1, l2) = (self.eigenvalue(1), self.eigenvalue(2));
        0.5 * (l2 * l2 - l1 * l1)
    }

    /// Decay rate of the leading term, `λ₁²/2`; equals `2 − d` for the set's law.
    pub fn leading_rate(&self) -> f64 {
        0.5 * self.eigenvalue(1).powi(2)
    }

    pub fn truncation_order(&self, t: f64, tol: f64) -> usize {
        if t <= 0.0 {
            return TERMS_AT_ZERO;
        }
        let k = self.length * (2.0 * (1.0 / tol).ln()).sqrt() / (PI * t.sqrt());
        (k.ceil() as usize).max(20)
    }

    /// `P(τ > t)` from the given start point.
    pub fn survival_from(&self, x: f64, t: f64) -> f64 {
        let k_max = self.truncation_order(t, SERIES_TOL);
        let mut sum = 0.0;
        // odd terms only; add smallest first
        let mut k = if k_max % 2 == 1 { k_max } else { k_max - 1 };
        loop {
            let l = self.eigenvalue(k);
            sum += self.coefficient(k) * (-0.5 * l * l * t).exp() * (l * x).sin();
            if k == 1 {
                break;
            }
            k -= 2;
        }
        sum.clamp(0.0, 1.0)
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.survival_from(self.start, t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// One-term asymptotic `(4/π) sin(λ₁x₀) e^{−λ₁² t/2}` of the survival.
    pub fn leading_term(&self, t: f64) -> f64 {
        self.coefficient(1) * (self.eigenvalue(1) * self.start).sin() * (-self.leading_rate() * t).exp()
    }

    /// Density `−du/dt`.
    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k_max = self.truncation_order(t, SERIES_TOL);
        let mut sum = 0.0;
        let mut k = 1;
        while k <= k_max {
            let l = self.eigenvalue(k);
            sum += self.coefficient(k) * 0.5 * l * l * (-0.5 * l * l * t).exp() * (l * self.start).sin();
            k += 2;
        }
        sum.max(0.0)
    }
}

/// Survival probability `P(τ > t)`; rejects negative or non-finite `t`.
pub fn exit_survival(law: &ExitLaw, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be non-negative, got {t}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(law.survival(t))
}

/// `E^x[exp(σ²τ/2)]` for the exit time of `(−a, b)`.
///
/// Obtained from the symmetric-interval formula by moving the centre of the
/// interval, `(b−a)/2`, to the origin.
pub fn exit_laplace(params: &TvsParams, sigma: f64, x: f64) -> Result<f64> {
    let limit = params.sigma_critical();
    if !(sigma >= 0.0 && sigma < limit) {
        return Err(Error::SigmaOutOfRange { sigma, limit });
    }
    let (a, b) = (params.a(), params.b());
    if !(x > -a && x < b) {
        return Err(Error::invalid("x", format!("must lie in (-{a}, {b}), got {x}")));
    }
    let centre = 0.5 * (b - a);
    let half = 0.5 * (a + b);
    Ok((sigma * (x - centre)).cos() / (sigma * half).cos())
}

#[cfg(test)]
mod tests {
    use super::super::quadrature::integrate;
    use super::*;

    fn params(a: f64, b: f64) -> TvsParams {
        TvsParams::new(a * LAMBDA, b * LAMBDA).unwrap()
    }

    #[test]
    fn eigen_structure() {
        let law = params(1.0, 3.0).exit_law();
        assert!((law.interval_length() - 4.0 * LAMBDA).abs() < 1e-15);
        assert!((law.start() - LAMBDA).abs() < 1e-15);
        for k in 1..50 {
            assert!(law.eigenvalue(k + 1) > law.eigenvalue(k));
            if k % 2 == 0 {
                assert_eq!(law.coefficient(k), 0.0);
            }
        }
    }

    #[test]
    fn leading_rate_is_codimension() {
        for (a, b) in [(1.0, 1.0), (2.0, 2.0), (1.0, 3.0), (0.5, 4.0)] {
            let p = params(a, b);
            assert!((p.exit_law().leading_rate() - (2.0 - p.dimension())).abs() < 1e-14);
        }
    }

    #[test]
    fn survival_at_zero_is_one() {
        for (a, b) in [(1.0, 1.0), (2.0, 2.0), (1.0, 3.0)] {
            let s = exit_survival(&params(a, b).exit_law(), 0.0).unwrap();
            assert!((s - 1.0).abs() < 1e-3, "{s}");
        }
    }

    #[test]
    fn long_time_tail_matches_leading_term() {
        // a = b = 2λ, t = 40: (4/π) e^{-5}
        let law = params(2.0, 2.0).exit_law();
        let s = exit_survival(&law, 40.0).unwrap();
        let target = 4.0 / PI * (-5.0f64).exp();
        assert!(((s - target) / target).abs() < 1e-6);
    }

    #[test]
    fn survival_monotone_on_grid() {
        let law = params(1.0, 3.0).exit_law();
        let mut prev = 1.0;
        for i in 0..400 {
            let t = 0.05 + 0.05 * i as f64;
            let s = law.survival(t);
            assert!(s <= prev + 1e-15);
            prev = s;
        }
    }

    #[test]
    fn rejects_negative_time() {
        let law = params(1.0, 1.0).exit_law();
        assert!(exit_survival(&law, -0.1).is_err());
        assert!(exit_survival(&law, f64::NAN).is_err());
    }

    // Independent oracle: the survival of the symmetric interval (-ℓ, ℓ) from 0,
    // written with cosines of the half-interval.
    fn symmetric_survival(half: f64, t: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..2000 {
            let m = (2 * j + 1) as f64;
            let l = m * PI / (2.0 * half);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * 4.0 / (m * PI) * (-0.5 * l * l * t).exp();
        }
        s
    }

    #[test]
    fn series_matches_cosine_form_for_symmetric_levels() {
        let law = params(1.0, 1.0).exit_law();
        for t in [0.1, 0.5, 2.0, 7.0] {
            assert!((law.survival(t) - symmetric_survival(LAMBDA, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_special_values() {
        let p = params(2.0, 2.0);
        assert_eq!(exit_laplace(&p, 0.0, 0.0).unwrap(), 1.0);
        let s = 0.3;
        assert!((exit_laplace(&p, s, 0.0).unwrap() - 1.0 / (s * p.a()).cos()).abs() < 1e-15);
        assert!(exit_laplace(&p, p.sigma_critical(), 0.0).is_err());
        assert!(exit_laplace(&p, 0.1, p.b()).is_err());
    }

    // E[e^{s τ}] = 1 + s ∫ e^{s t} u(t) dt with s = σ²/2.
    #[test]
    fn laplace_transform_consistent_with_series() {
        for (a, b) in [(1.0, 1.0), (1.0, 3.0), (2.0, 2.0)] {
            let p = params(a, b);
            let sigma = 0.5 * p.sigma_critical();
            let s = 0.5 * sigma * sigma;
            let law = p.exit_law();
            let tail = integrate(|t| (s * t).exp() * law.survival(t), 1e-9, 400.0, 1e-12, 1e-11).unwrap();
            let lhs = 1.0 + s * tail;
            let rhs = exit_laplace(&p, sigma, 0.0).unwrap();
            assert!((lhs - rhs).abs() < 1e-7 * rhs, "{a} {b}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let law = params(1.0, 3.0).exit_law();
        let m = integrate(|t| law.density(t), 1e-6, 200.0, 1e-10, 1e-10).unwrap();
        assert!((m - 1.0).abs() < 1e-6);
    }
}
