//! Chaos moments conditioned on an extracted two-valued set: nested Monte Carlo
//! over fresh fields in the components, and the component-kernel formulas.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_separated, cosine_product, ChaosBuilder};
use crate::analytic::three_point_from_greens;
use crate::geometry::Region;
use crate::lattice::{GffSample, LatticeDomain, FIELD_SCALE};
use crate::rng::nested_rng;
use crate::stats::{ComplexEstimate, Estimate};
use crate::tvs::{RadiusMode, TvsApprox};
use crate::{Error, Result};

fn check_subcritical(tvs: &TvsApprox, sigma: f64) -> Result<()> {
    let limit = tvs.params().sigma_critical();
    if sigma < limit {
        Ok(())
    } else {
        Err(Error::SigmaOutOfRange { sigma, limit })
    }
}

/// Components whose nodes feed a circle average taken at `nodes`.
fn touched_components(domain: &LatticeDomain, tvs: &TvsApprox, builder: &ChaosBuilder, nodes: &[usize]) -> Vec<bool> {
    let mut touched = vec![false; tvs.components().len()];
    for &u in nodes {
        let (i, j) = domain.grid_coords(u);
        for &(di, dj, _) in builder.stencil().taps() {
            if let Some(c) = domain.node_at(i + di, j + dj).and_then(|v| tvs.component_index(v)) {
                touched[c] = true;
            }
        }
    }
    touched
}

/// Inner loop: `resamples` fresh fields in the touched components, `f` on each.
#[allow(clippy::too_many_arguments)]
fn resampled<T, F>(
    domain: &LatticeDomain,
    sample: &GffSample,
    tvs: &TvsApprox,
    touched: &[bool],
    resamples: usize,
    seed: u64,
    outer: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&GffSample) -> Result<T> + Sync,
{
    for (c, _) in tvs.components().iter().zip(touched).filter(|(_, &t)| t) {
        c.subgraph(domain)?;
    }
    (0..resamples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = nested_rng(seed, outer, k);
            let s = tvs.markov_resample_where(domain, sample, &mut rng, |c| touched[c.id()])?;
            f(&s)
        })
        .collect()
}

/// Nested estimate of `E[(V_ε, 1_U) | F_A]` for one extracted set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOnePoint {
    pub estimate: ComplexEstimate,
    /// Sum over component nodes of `h² r^{−σ²/2} e^{iσ label}`.
    pub target: Complex64,
    pub radius_mode: RadiusMode,
}

#[allow(clippy::too_many_arguments)]
pub fn conditional_one_point(
    domain: &LatticeDomain,
    sample: &GffSample,
    tvs: &TvsApprox,
    builder: &ChaosBuilder,
    region: &Region,
    resamples: usize,
    radius_mode: RadiusMode,
    seed: u64,
    outer: u64,
) -> Result<ConditionalOnePoint> {
    let sigma = builder.sigma();
    check_subcritical(tvs, sigma)?;
    let nodes = builder.region_nodes(domain, region)?;
    let touched = touched_components(domain, tvs, builder, &nodes);
    let pairs = resampled(domain, sample, tvs, &touched, resamples, seed, outer, |s| {
        builder.pair_region(domain, s, region)
    })?;

    let free: Vec<usize> = nodes.iter().copied().filter(|&u| !tvs.is_reached(u)).collect();
    let radii = tvs.radii(domain, &free, radius_mode)?;
    let e = -0.5 * sigma * sigma;
    let mut target = Complex64::new(0.0, 0.0);
    for (&u, r) in free.iter().zip(radii) {
        let label = tvs.harmonic_value(u).expect("free node has a component");
        target += Complex64::from_polar(r.powf(e), sigma * label);
    }
    Ok(ConditionalOnePoint {
        estimate: ComplexEstimate::from_samples(&pairs),
        target: target * domain.h() * domain.h(),
        radius_mode,
    })
}

/// Nodes of `nodes` on a sub-grid of stride `s`, the smallest stride leaving at
/// most `max_points`; each stands for `(s h)²` of area.
fn subgrid(domain: &LatticeDomain, nodes: &[usize], max_points: usize) -> (Vec<usize>, f64) {
    let mut stride = 1i64;
    loop {
        let kept: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|&u| {
                let (i, j) = domain.grid_coords(u);
                i % stride == 0 && j % stride == 0
            })
            .collect();
        if kept.len() <= max_points.max(1) {
            let w = stride as f64 * domain.h();
            return (kept, w * w);
        }
        stride += 1;
    }
}

/// Exact `E[(V_ε, 1_U) | F_A]` on the lattice, by a Riemann sum over at most
/// `max_points` nodes of `U`. The circle average is Gaussian given the set:
/// its mean uses labels in components and the sampled values elsewhere, its
/// variance the component Green's functions.
pub fn lattice_conditional_mean(
    domain: &LatticeDomain,
    sample: &GffSample,
    tvs: &TvsApprox,
    builder: &ChaosBuilder,
    region: &Region,
    max_points: usize,
) -> Result<Complex64> {
    let nodes = builder.region_nodes(domain, region)?;
    let (points, weight) = subgrid(domain, &nodes, max_points);
    let sigma = builder.sigma();
    let comps = tvs.components();
    let terms: Vec<Result<Complex64>> = points
        .par_iter()
        .map(|&u| {
            let (i, j) = domain.grid_coords(u);
            let mut mean = 0.0;
            let mut per_comp: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
            for &(di, dj, w) in builder.stencil().taps() {
                let Some(v) = domain.node_at(i + di, j + dj) else {
                    mean += w * sample.boundary_shift();
                    continue;
                };
                match tvs.component_index(v) {
                    Some(c) => {
                        mean += w * comps[c].label_value();
                        let local = comps[c].local_index(v).expect("node of its component");
                        match per_comp.iter_mut().find(|(k, _)| *k == c) {
                            Some((_, taps)) => taps.push((local, w)),
                            None => per_comp.push((c, vec![(local, w)])),
                        }
                    }
                    None => mean += w * sample.value(v),
                }
            }
            let mut var = 0.0;
            for (c, taps) in per_comp {
                let sub = comps[c].subgraph(domain)?;
                let mut x = vec![0.0; sub.len()];
                for &(l, w) in &taps {
                    x[l] += w;
                }
                let rhs = x.clone();
                sub.solve_in_place(&mut x);
                var += FIELD_SCALE * rhs.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            }
            Ok(Complex64::from_polar(
                builder.modulus() * (-0.5 * sigma * sigma * var).exp(),
                sigma * mean,
            ))
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for t in terms {
        sum += t?;
    }
    Ok(sum * weight)
}

/// The conditional cosine triple moment evaluated from the components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalThreePoint {
    /// `cos(aσ) ∭H − 8 cos(aσ) sin²(aσ) ∭ Σ_k 1_{A_k} T_k`.
    pub rhs: f64,
    /// `cos³(aσ) ∭H`.
    pub lower_bound: f64,
    /// `∭ H_{𝔻∖A}`.
    pub h_integral: f64,
    /// `2 ∭ Σ_s cos(σ s·h) T_s`, the unsimplified expansion of the product of cosines.
    pub direct: f64,
}

struct KernelPoint {
    node: usize,
    comp: usize,
    label: f64,
    radius: f64,
}

/// Right side of the conditional cosine triple identity for `A_{−a,a}`,
/// by sub-grid Riemann sums with at most `max_points` nodes per region.
///
/// `A_1` is `h(x) = h(y) = h(z)`, `A_2` is `h(x) = h(y) ≠ h(z)`, `A_3` is
/// `h(x) = h(z) ≠ h(y)` and `A_4` is `h(y) = h(z) ≠ h(x)`; `T_k` is the
/// three-point correlation with the matching charge flipped.
pub fn conditional_three_point_rhs(
    domain: &LatticeDomain,
    tvs: &TvsApprox,
    regions: &[Region; 3],
    sigma: f64,
    max_points: usize,
) -> Result<ConditionalThreePoint> {
    let params = tvs.params();
    if !params.is_symmetric() {
        return Err(Error::AsymmetricLevels {
            a: params.a(),
            b: params.b(),
        });
    }
    check_subcritical(tvs, sigma)?;
    for i in 0..3 {
        for j in i + 1..3 {
            if regions[i].gap(&regions[j]) <= 0.0 {
                return Err(Error::OverlappingRegions(format!("regions {i} and {j} touch")));
            }
        }
    }
    let comps = tvs.components();
    let mut sets: Vec<(Vec<KernelPoint>, f64)> = Vec::new();
    for r in regions {
        r.validate()?;
        let (nodes, w) = subgrid(domain, &domain.nodes_in(r), max_points);
        let pts = nodes
            .into_iter()
            .filter_map(|u| tvs.component_index(u).map(|c| (u, c)))
            .map(|(u, c)| {
                Ok(KernelPoint {
                    node: u,
                    comp: c,
                    label: comps[c].label_value(),
                    radius: comps[c].conformal_radius(domain, u)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sets.push((pts, w));
    }
    let (xs, wx) = &sets[0];
    let (ys, wy) = &sets[1];
    let (zs, wz) = &sets[2];

    // component Green's function between two point sets, 0 across components
    let greens = |from: &[KernelPoint], to: &[KernelPoint]| -> Result<Vec<Vec<f64>>> {
        from.par_iter()
            .map(|p| {
                if !to.iter().any(|q| q.comp == p.comp) {
                    return Ok(vec![0.0; to.len()]);
                }
                let col = comps[p.comp].green_column(domain, p.node)?;
                Ok(to
                    .iter()
                    .map(|q| {
                        if q.comp == p.comp {
                            col[comps[p.comp].local_index(q.node).expect("same component")]
                        } else {
                            0.0
                        }
                    })
                    .collect())
            })
            .collect()
    };
    let gxy = greens(xs, ys)?;
    let gxz = greens(xs, zs)?;
    let gyz = greens(ys, zs)?;

    let s2 = sigma * sigma;
    let signs = [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]];
    let (mut h_sum, mut t_sum, mut direct) = (0.0, 0.0, 0.0);
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            for (k, z) in zs.iter().enumerate() {
                let pref = (x.radius * y.radius * z.radius).powf(-0.5 * s2);
                let t = three_point_from_greens(pref, gxy[i][j], gxz[i][k], gyz[j][k], sigma);
                let which = if x.label == y.label && y.label == z.label {
                    0
                } else if x.label == y.label {
                    1
                } else if x.label == z.label {
                    2
                } else {
                    3
                };
                h_sum += 2.0 * t.iter().sum::<f64>();
                t_sum += t[which];
                direct += 2.0
                    * signs
                        .iter()
                        .zip(&t)
                        .map(|(s, tk)| (sigma * (s[0] * x.label + s[1] * y.label + s[2] * z.label)).cos() * tk)
                        .sum::<f64>();
            }
        }
    }
    let vol = wx * wy * wz;
    let (h_int, t_int, direct) = (h_sum * vol, t_sum * vol, direct * vol);
    let (c, s) = ((params.a() * sigma).cos(), (params.a() * sigma).sin());
    Ok(ConditionalThreePoint {
        rhs: c * h_int - 8.0 * c * s * s * t_int,
        lower_bound: c * c * c * h_int,
        h_integral: h_int,
        direct,
    })
}

/// Nested estimate of `E[C_U C_V C_W | F_A]`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_three_point_mc(
    domain: &LatticeDomain,
    sample: &GffSample,
    tvs: &TvsApprox,
    builder: &ChaosBuilder,
    regions: &[Region; 3],
    resamples: usize,
    seed: u64,
    outer: u64,
) -> Result<Estimate> {
    check_subcritical(tvs, builder.sigma())?;
    check_separated(regions, builder.eps())?;
    let mut nodes = Vec::new();
    for r in regions {
        nodes.extend(builder.region_nodes(domain, r)?);
    }
    let touched = touched_components(domain, tvs, builder, &nodes);
    let products = resampled(domain, sample, tvs, &touched, resamples, seed, outer, |s| {
        cosine_product(domain, builder, s, regions)
    })?;
    Ok(Estimate::from_samples(&products))
}
