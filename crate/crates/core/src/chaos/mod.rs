//! Regularised imaginary chaos `ε^{−σ²/2} e^{iσΓ_ε}` on lattice samples, its
//! pairings with indicators, and the moment experiments built on them.

mod conditional;
mod targets;

pub use conditional::{
    conditional_one_point, conditional_three_point_mc, conditional_three_point_rhs, lattice_conditional_mean,
    ConditionalOnePoint, ConditionalThreePoint,
};
pub use targets::{one_point_target, triple_target, two_point_target};

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Region;
use crate::lattice::{circle_kappa, CircleStencil, GffSample, LatticeDomain};
use crate::stats::{ComplexEstimate, Estimate};
use crate::{Error, Result};

/// Largest σ for which the chaos exists.
pub const SIGMA_MAX: f64 = SQRT_2;

/// Everything needed to evaluate the chaos on samples of one lattice: the
/// circle stencil and the normalising modulus.
///
/// The modulus is `ε^{−σ²/2} e^{σ²κ_ε/2}`, where `κ_ε` is the lattice excess of
/// the circle-average variance at the centre. With it the one-point mean is
/// `r_𝔻(z)^{−σ²/2}` up to discretisation error.
#[derive(Debug, Clone)]
pub struct ChaosBuilder {
    sigma: f64,
    stencil: CircleStencil,
    kappa: f64,
    modulus: f64,
}

impl ChaosBuilder {
    pub fn new(domain: &LatticeDomain, sigma: f64, eps: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let stencil = CircleStencil::new(domain, eps)?;
        let kappa = circle_kappa(domain, eps)?;
        Ok(Self::assemble(sigma, stencil, kappa))
    }

    /// Same lattice and ε, different σ; skips recalibrating `κ_ε`.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self::assemble(sigma, self.stencil.clone(), self.kappa))
    }

    fn assemble(sigma: f64, stencil: CircleStencil, kappa: f64) -> Self {
        let s2 = sigma * sigma;
        let modulus = stencil.eps().powf(-0.5 * s2) * (0.5 * s2 * kappa).exp();
        ChaosBuilder {
            sigma,
            stencil,
            kappa,
            modulus,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.stencil.eps()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn stencil(&self) -> &CircleStencil {
        &self.stencil
    }

    /// Nodes of `region`, all of which must admit a full circle of radius ε.
    pub fn region_nodes(&self, domain: &LatticeDomain, region: &Region) -> Result<Vec<usize>> {
        let nodes = domain.nodes_in(region);
        if let Some(&u) = nodes.iter().find(|&&u| !self.stencil.admissible(domain, u)) {
            return Err(Error::RegionOutsideEvaluation(format!(
                "{region:?} reaches {} inside the collar of width {}",
                domain.position(u),
                self.eps()
            )));
        }
        Ok(nodes)
    }

    pub fn value(&self, domain: &LatticeDomain, sample: &GffSample, node: usize) -> Complex64 {
        Complex64::from_polar(self.modulus, self.sigma * self.stencil.average_at(domain, sample, node))
    }

    /// The field on every admissible node.
    pub fn build(&self, domain: &LatticeDomain, sample: &GffSample) -> ChaosField {
        let nodes = (0..domain.node_count())
            .filter(|&u| self.stencil.admissible(domain, u))
            .collect();
        self.field(domain, sample, nodes)
    }

    /// The field on `region` only.
    pub fn build_on(&self, domain: &LatticeDomain, sample: &GffSample, region: &Region) -> Result<ChaosField> {
        let nodes = self.region_nodes(domain, region)?;
        Ok(self.field(domain, sample, nodes))
    }

    fn field(&self, domain: &LatticeDomain, sample: &GffSample, nodes: Vec<usize>) -> ChaosField {
        let values = nodes.iter().map(|&u| self.value(domain, sample, u)).collect();
        ChaosField {
            sigma: self.sigma,
            eps: self.eps(),
            modulus: self.modulus,
            h: domain.h(),
            nodes,
            values,
        }
    }

    /// `(V_ε, 1_U)` without keeping the field.
    pub fn pair_region(&self, domain: &LatticeDomain, sample: &GffSample, region: &Region) -> Result<Complex64> {
        let nodes = self.region_nodes(domain, region)?;
        let sum: Complex64 = nodes.iter().map(|&u| self.value(domain, sample, u)).sum();
        Ok(sum * domain.h() * domain.h())
    }

    /// `C_U = 2 Re (V_ε, 1_U)`.
    pub fn cosine(&self, domain: &LatticeDomain, sample: &GffSample, region: &Region) -> Result<f64> {
        Ok(2.0 * self.pair_region(domain, sample, region)?.re)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < SIGMA_MAX {
        Ok(())
    } else {
        Err(Error::SigmaOutOfRange {
            sigma,
            limit: SIGMA_MAX,
        })
    }
}

/// Chaos values on a set of evaluation nodes of one sample.
#[derive(Debug, Clone)]
pub struct ChaosField {
    sigma: f64,
    eps: f64,
    modulus: f64,
    h: f64,
    nodes: Vec<usize>,
    values: Vec<Complex64>,
}

impl ChaosField {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, node: usize) -> Option<Complex64> {
        self.nodes.binary_search(&node).ok().map(|k| self.values[k])
    }

    /// Riemann sum of the field over the nodes of `region`.
    pub fn pair_indicator(&self, domain: &LatticeDomain, region: &Region) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for u in domain.nodes_in(region) {
            sum += self.value_at(u).ok_or_else(|| {
                Error::RegionOutsideEvaluation(format!("node at {} is not an evaluation node", domain.position(u)))
            })?;
        }
        Ok(sum * self.h * self.h)
    }

    /// Riemann sum of `f · V_ε` over all evaluation nodes.
    pub fn pair_with<F: Fn(crate::geometry::Point) -> f64>(&self, domain: &LatticeDomain, f: F) -> Complex64 {
        let sum: Complex64 = self
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&u, v)| v * f(domain.position(u)))
            .sum();
        sum * self.h * self.h
    }

    pub fn cosine(&self, domain: &LatticeDomain, region: &Region) -> Result<f64> {
        Ok(2.0 * self.pair_indicator(domain, region)?.re)
    }
}

pub fn build_chaos(domain: &LatticeDomain, sample: &GffSample, sigma: f64, eps: f64) -> Result<ChaosField> {
    Ok(ChaosBuilder::new(domain, sigma, eps)?.build(domain, sample))
}

pub fn pair_indicator(chaos: &ChaosField, domain: &LatticeDomain, region: &Region) -> Result<Complex64> {
    chaos.pair_indicator(domain, region)
}

/// First and second moments of `(V_ε, 1_U)` with their quadrature targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingMoments {
    pub first: ComplexEstimate,
    /// `E|(V_ε, 1_U)|²`.
    pub second: Estimate,
    pub first_target: f64,
    pub second_target: f64,
}

pub fn pairing_moments(
    domain: &LatticeDomain,
    builder: &ChaosBuilder,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<PairingMoments> {
    builder.region_nodes(domain, region)?;
    let pairs = domain.sample_ensemble(samples, seed, |_, s| builder.pair_region(domain, s, region))?;
    let squares: Vec<f64> = pairs.iter().map(|p| p.norm_sqr()).collect();
    Ok(PairingMoments {
        first: ComplexEstimate::from_samples(&pairs),
        second: Estimate::from_samples(&squares),
        first_target: one_point_target(region, builder.sigma())?,
        second_target: two_point_target(region, builder.sigma())?,
    })
}

/// Rejects region triples closer than twice the regularisation radius.
pub(crate) fn check_separated(regions: &[Region; 3], eps: f64) -> Result<()> {
    for i in 0..3 {
        for j in i + 1..3 {
            let gap = regions[i].gap(&regions[j]);
            if gap <= 2.0 * eps {
                return Err(Error::OverlappingRegions(format!(
                    "regions {i} and {j} are {gap} apart, need more than {}",
                    2.0 * eps
                )));
            }
        }
    }
    Ok(())
}

/// `C_U C_V C_W` on one sample.
pub fn cosine_product(
    domain: &LatticeDomain,
    builder: &ChaosBuilder,
    sample: &GffSample,
    regions: &[Region; 3],
) -> Result<f64> {
    let mut p = 1.0;
    for r in regions {
        p *= builder.cosine(domain, sample, r)?;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleMoment {
    pub estimate: Estimate,
    /// Triple integral of the three-point kernel of the disc.
    pub target: f64,
}

pub fn cosine_triple(
    domain: &LatticeDomain,
    builder: &ChaosBuilder,
    regions: &[Region; 3],
    samples: usize,
    seed: u64,
) -> Result<TripleMoment> {
    check_separated(regions, builder.eps())?;
    for r in regions {
        builder.region_nodes(domain, r)?;
    }
    let products = domain.sample_ensemble(samples, seed, |_, s| cosine_product(domain, builder, s, regions))?;
    Ok(TripleMoment {
        estimate: Estimate::from_samples(&products),
        target: triple_target(regions, builder.sigma())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::rng::task_rng;

    #[test]
    fn modulus_is_deterministic() {
        let d = LatticeDomain::new(64).unwrap();
        let b = ChaosBuilder::new(&d, 0.7, 0.1).unwrap();
        let expect = 0.1f64.powf(-0.245) * (0.245 * b.kappa()).exp();
        assert!((b.modulus() - expect).abs() < 1e-14);
        let f = b.build(&d, &d.sample_gff(&mut task_rng(1, 0)));
        assert!(!f.nodes().is_empty());
        assert!(f.values().iter().all(|v| (v.norm() - expect).abs() < 1e-12));
        assert!(f.nodes().iter().all(|&u| d.position(u).norm() + 0.1 < 1.0));
    }

    #[test]
    fn vanishing_sigma_gives_ones() {
        let d = LatticeDomain::new(48).unwrap();
        let f = build_chaos(&d, &d.sample_gff(&mut task_rng(2, 0)), 1e-9, 0.15).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).norm() < 1e-6));
    }

    #[test]
    fn rejects_bad_sigma_and_eps() {
        let d = LatticeDomain::new(32).unwrap();
        assert!(matches!(
            ChaosBuilder::new(&d, 0.0, 0.2),
            Err(Error::SigmaOutOfRange { .. })
        ));
        assert!(matches!(
            ChaosBuilder::new(&d, 1.5, 0.2),
            Err(Error::SigmaOutOfRange { .. })
        ));
        assert!(matches!(
            ChaosBuilder::new(&d, 0.5, 0.1),
            Err(Error::EpsTooSmall { .. })
        ));
    }

    #[test]
    fn empty_region_pairs_to_zero() {
        let d = LatticeDomain::new(32).unwrap();
        let f = build_chaos(&d, &GffSample::zero(&d), 0.5, 0.2).unwrap();
        // smaller than a lattice cell and centred between nodes
        let tiny = Region::disc(point(0.5 * d.h(), 0.5 * d.h()), 0.1 * d.h());
        assert_eq!(f.pair_indicator(&d, &tiny).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn collar_is_refused() {
        let d = LatticeDomain::new(32).unwrap();
        let b = ChaosBuilder::new(&d, 0.5, 0.2).unwrap();
        let f = b.build(&d, &GffSample::zero(&d));
        let near_edge = Region::disc(point(0.7, 0.0), 0.15);
        assert!(matches!(
            f.pair_indicator(&d, &near_edge),
            Err(Error::RegionOutsideEvaluation(_))
        ));
        assert!(matches!(
            b.pair_region(&d, &GffSample::zero(&d), &near_edge),
            Err(Error::RegionOutsideEvaluation(_))
        ));
    }

    #[test]
    fn streaming_pairing_matches_field() {
        let d = LatticeDomain::new(64).unwrap();
        let b = ChaosBuilder::new(&d, 0.5, 0.1).unwrap();
        let s = d.sample_gff(&mut task_rng(3, 0));
        let u = Region::disc(point(0.1, -0.2), 0.3);
        let full = b.build(&d, &s).pair_indicator(&d, &u).unwrap();
        let local = b.build_on(&d, &s, &u).unwrap().pair_indicator(&d, &u).unwrap();
        let stream = b.pair_region(&d, &s, &u).unwrap();
        assert!((full - stream).norm() < 1e-12);
        assert!((local - stream).norm() < 1e-12);
        let with = b.build(&d, &s).pair_with(&d, |z| if u.contains(z) { 1.0 } else { 0.0 });
        assert!((with - stream).norm() < 1e-12);
    }

    #[test]
    fn cosine_bounded_by_area() {
        let d = LatticeDomain::new(64).unwrap();
        let b = ChaosBuilder::new(&d, 0.9, 0.1).unwrap();
        let u = Region::disc(point(0.0, 0.3), 0.2);
        let cells = d.nodes_in(&u).len() as f64 * d.h() * d.h();
        for k in 0..5 {
            let c = b.cosine(&d, &d.sample_gff(&mut task_rng(4, k)), &u).unwrap();
            assert!(c.abs() <= 2.0 * cells * b.modulus() + 1e-12);
        }
    }

    #[test]
    fn triple_refuses_close_regions() {
        let d = LatticeDomain::new(32).unwrap();
        let b = ChaosBuilder::new(&d, 0.5, 0.2).unwrap();
        let r = [
            Region::disc(point(0.0, 0.0), 0.1),
            Region::disc(point(0.3, 0.0), 0.1),
            Region::disc(point(-0.5, 0.0), 0.1),
        ];
        assert!(matches!(
            cosine_triple(&d, &b, &r, 2, 0),
            Err(Error::OverlappingRegions(_))
        ));
    }

    #[test]
    fn triple_product_is_symmetric() {
        let d = LatticeDomain::new(64).unwrap();
        let b = ChaosBuilder::new(&d, 0.5, 0.1).unwrap();
        let r = [
            Region::disc(point(0.3, 0.0), 0.08),
            Region::disc(point(-0.2, 0.3), 0.08),
            Region::disc(point(-0.2, -0.3), 0.08),
        ];
        let s = d.sample_gff(&mut task_rng(5, 0));
        let p = cosine_product(&d, &b, &s, &r).unwrap();
        let q = cosine_product(&d, &b, &s, &[r[2], r[0], r[1]]).unwrap();
        assert!((p - q).abs() <= 1e-14 * p.abs().max(1.0));
    }
}
