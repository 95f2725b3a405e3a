//! Brownian bridges along lattice edges: exit probabilities from a band and
//! the first exit point.

use rand::Rng;
use rand_distr::StandardNormal;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `(seed, key)`; used both as a uniform and as a stream seed.
pub(crate) fn edge_hash(seed: u64, key: u64) -> u64 {
    splitmix(seed ^ splitmix(key))
}

pub(crate) fn edge_uniform(seed: u64, key: u64) -> f64 {
    (edge_hash(seed, key) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Probability that a Brownian bridge from `x` to `y` (both inside `(lo, hi)`)
/// with total variance `var` leaves the band. Method of images, summed so that
/// small probabilities keep full relative precision.
pub fn exit_probability(x: f64, y: f64, lo: f64, hi: f64, var: f64) -> f64 {
    let w = hi - lo;
    let (x, y) = (x - lo, y - lo);
    if x <= 0.0 || y <= 0.0 || x >= w || y >= w {
        return 1.0;
    }
    let mut p = (-2.0 * x * y / var).exp() + (-2.0 * (w - x) * (w - y) / var).exp();
    // image terms |k| ≥ 1 are bounded by exp(−2k²w²/var)
    for k in 1..8 {
        if -2.0 * (k * k) as f64 * w * w / var < -40.0 {
            break;
        }
        for kw in [k as f64 * w, -(k as f64) * w] {
            p -= (-2.0 * kw * (kw + y - x) / var).exp();
        }
        let (up, down) = (k as f64 * w, -((k + 1) as f64) * w);
        p += (-2.0 * (x + up) * (y + up) / var).exp() + (-2.0 * (x + down) * (y + down) / var).exp();
    }
    p.clamp(0.0, 1.0)
}

/// First exit of a bridge from `x0` (inside the band) to `x1`, conditioned on
/// leaving the band. Returns the exit time as a fraction of the edge (to within
/// 1e-4) and whether the upper level was hit. Found by bisection with exact
/// midpoint laws.
pub fn first_exit<R: Rng + ?Sized>(x0: f64, x1: f64, lo: f64, hi: f64, var: f64, rng: &mut R) -> (f64, bool) {
    let out = |v: f64| v <= lo || v >= hi;
    let (mut s0, mut dt, mut a, mut b) = (0.0, 1.0, x0, x1);
    while dt > 1e-4 {
        let half = 0.5 * dt;
        let sd = (0.25 * var * dt).sqrt();
        let mut tries = 0;
        let first = loop {
            tries += 1;
            let z: f64 = rng.sample(StandardNormal);
            let m = 0.5 * (a + b) + sd * z;
            if out(m) {
                break (m, 1.0);
            }
            let q1 = exit_probability(a, m, lo, hi, var * half);
            if out(b) {
                break (m, q1);
            }
            let q2 = exit_probability(m, b, lo, hi, var * half);
            let p = q1 + q2 - q1 * q2;
            if rng.random::<f64>() < p || tries >= 10_000 {
                break (m, if p > 0.0 { q1 / p } else { 0.5 });
            }
        };
        let (m, p_first) = first;
        if rng.random::<f64>() < p_first {
            b = m;
        } else {
            a = m;
            s0 += half;
        }
        dt = half;
    }
    let upper = if out(b) { b >= hi } else { hi - a.max(b) < a.min(b) - lo };
    (s0 + 0.5 * dt, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;

    // Oracle: fine Gaussian random walk bridges with per-step crossing correction.
    fn simulated_exit(x: f64, y: f64, lo: f64, hi: f64, var: f64, paths: usize) -> (f64, Vec<f64>) {
        let steps = 400;
        let dt = 1.0 / steps as f64;
        let mut rng = task_rng(77, 0);
        let mut hits = 0;
        let mut times = Vec::new();
        for _ in 0..paths {
            // free walk then pin the end
            let mut w = vec![0.0; steps + 1];
            for k in 1..=steps {
                let z: f64 = rng.sample(StandardNormal);
                w[k] = w[k - 1] + (var * dt).sqrt() * z;
            }
            let path: Vec<f64> = (0..=steps)
                .map(|k| {
                    let s = k as f64 * dt;
                    x + w[k] - s * w[steps] + s * (y - x)
                })
                .collect();
            for k in 0..steps {
                let (p, q) = (path[k], path[k + 1]);
                let crossed = q <= lo || q >= hi || {
                    let pc = (-2.0 * (hi - p) * (hi - q) / (var * dt)).exp()
                        + (-2.0 * (p - lo) * (q - lo) / (var * dt)).exp();
                    rng.random::<f64>() < pc
                };
                if crossed {
                    hits += 1;
                    times.push((k as f64 + 0.5) * dt);
                    break;
                }
            }
        }
        (hits as f64 / paths as f64, times)
    }

    #[test]
    fn single_level_limit() {
        // far lower level: the classical bridge crossing probability
        let p = exit_probability(0.0, 0.5, -100.0, 1.0, 1.0);
        assert!((p - (-2.0f64 * 1.0 * 0.5).exp()).abs() < 1e-14);
    }

    #[test]
    fn exit_probability_matches_walk() {
        let (lo, hi, var) = (-1.0, 1.2, 1.5);
        for (x, y) in [(0.0, 0.3), (0.8, -0.7), (-0.9, -0.9)] {
            let p = exit_probability(x, y, lo, hi, var);
            let (emp, _) = simulated_exit(x, y, lo, hi, var, 20000);
            let se = (p * (1.0 - p) / 20000.0).sqrt();
            assert!((emp - p).abs() < 4.0 * se + 0.01, "{x},{y}: {emp} vs {p}");
        }
    }

    #[test]
    fn truncated_images_match_full_sum() {
        for &(x, y, var) in &[(0.3, -0.2, 1.0), (0.9, 0.95, 30.0), (-0.99, 0.99, 200.0)] {
            let (lo, hi) = (-1.0, 1.0);
            let (w, xs, ys) = (hi - lo, x - lo, y - lo);
            let mut stay = 0.0;
            for k in -40i32..=40 {
                let kw = k as f64 * w;
                stay += (-2.0 * kw * (kw + ys - xs) / var).exp() - (-2.0 * (xs + kw) * (ys + kw) / var).exp();
            }
            let p = exit_probability(x, y, lo, hi, var);
            assert!((p - (1.0 - stay)).abs() < 1e-12, "{p} vs {}", 1.0 - stay);
        }
    }

    #[test]
    fn exit_probability_monotone_in_band() {
        let narrow = exit_probability(0.1, -0.2, -1.0, 1.0, 2.0);
        let wide = exit_probability(0.1, -0.2, -1.5, 1.5, 2.0);
        assert!(narrow > wide && wide > 0.0);
        assert_eq!(exit_probability(0.0, 2.0, -1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn first_exit_time_law_matches_walk() {
        let (lo, hi, var) = (-1.0, 1.0, 2.0);
        let (x, y) = (0.2, 0.6);
        let (_, walk) = simulated_exit(x, y, lo, hi, var, 40000);
        let mut rng = task_rng(3, 9);
        let mut exact: Vec<f64> = (0..walk.len())
            .map(|_| first_exit(x, y, lo, hi, var, &mut rng).0)
            .collect();
        let mut walk = walk;
        walk.sort_by(f64::total_cmp);
        exact.sort_by(f64::total_cmp);
        // two-sample KS
        let (mut i, mut j, mut dmax) = (0, 0, 0.0f64);
        while i < walk.len() && j < exact.len() {
            if walk[i] <= exact[j] {
                i += 1;
            } else {
                j += 1;
            }
            dmax = dmax.max((i as f64 / walk.len() as f64 - j as f64 / exact.len() as f64).abs());
        }
        let crit = 1.95 * (2.0 / walk.len() as f64).sqrt() + 0.01;
        assert!(dmax < crit, "{dmax} vs {crit}");
    }

    #[test]
    fn first_exit_picks_the_crossed_level() {
        let mut rng = task_rng(4, 0);
        for _ in 0..200 {
            let (t, upper) = first_exit(0.0, 3.0, -1.0, 1.0, 0.05, &mut rng);
            assert!(upper && t > 0.0 && t < 1.0);
            let (_, upper) = first_exit(0.0, -3.0, -1.0, 1.0, 0.05, &mut rng);
            assert!(!upper);
        }
    }

    #[test]
    fn uniforms_are_spread() {
        let u: Vec<f64> = (0..10000).map(|k| edge_uniform(1, k)).collect();
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
        assert!(u.iter().all(|&x| (0.0..1.0).contains(&x)));
    }
}
