//! Direct simulation of one-dimensional Brownian exit times: an oracle for the
//! exit-time series that shares no code with it.
//!
//! Increments are exact Gaussians. Steps shrink near the boundary and a
//! Brownian-bridge test catches excursions that leave and re-enter within a step.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::task_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ExitSimulator {
    length: f64,
    start: f64,
    max_dt: f64,
    min_dt: f64,
}

impl ExitSimulator {
    /// Exit from `(0, length)` started at `start`; steps never exceed `max_dt`.
    pub fn new(length: f64, start: f64, max_dt: f64) -> Result<Self> {
        if !(length > 0.0 && start > 0.0 && start < length) {
            return Err(Error::invalid(
                "start",
                format!("must lie in (0, {length}), got {start}"),
            ));
        }
        if !(max_dt > 0.0) {
            return Err(Error::invalid("max_dt", format!("must be positive, got {max_dt}")));
        }
        Ok(ExitSimulator {
            length,
            start,
            max_dt,
            min_dt: (max_dt * 1e-3).min(1e-6),
        })
    }

    pub fn exit_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = self.start;
        let mut t = 0.0;
        loop {
            let m = x.min(self.length - x);
            let dt = (m * m / 9.0).clamp(self.min_dt, self.max_dt);
            let z: f64 = rng.sample(StandardNormal);
            let y = x + dt.sqrt() * z;
            if y <= 0.0 || y >= self.length {
                return t + 0.5 * dt;
            }
            // bridge between x and y touches either end with these probabilities
            let p = (-2.0 * x * y / dt).exp() + (-2.0 * (self.length - x) * (self.length - y) / dt).exp();
            if p > 1e-16 && rng.random::<f64>() < p {
                return t + 0.5 * dt;
            }
            x = y;
            t += dt;
        }
    }

    /// `count` exit times drawn in fixed-size chunks, one random stream per chunk.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        const CHUNK: usize = 1000;
        let chunks: Vec<Vec<f64>> = (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = task_rng(seed, c as u64);
                let len = CHUNK.min(count - c * CHUNK);
                (0..len).map(|_| self.exit_time(&mut rng)).collect()
            })
            .collect();
        chunks.concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_exit_time_is_product_of_distances() {
        // E[τ] = x(L − x)
        let sim = ExitSimulator::new(3.0, 1.0, 1e-2).unwrap();
        let ts = sim.sample(20_000, 11);
        let e = crate::stats::Estimate::from_samples(&ts);
        assert!(e.within(2.0, 4.0), "{e:?}");
    }

    #[test]
    fn rejects_start_outside() {
        assert!(ExitSimulator::new(1.0, 1.5, 1e-3).is_err());
    }
}
