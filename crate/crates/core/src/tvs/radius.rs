use serde::{Deserialize, Serialize};

use super::{extract_tvs, TvsApprox};
use crate::analytic::{disc_conformal_radius, TvsParams};
use crate::geometry::Point;
use crate::lattice::{GffSample, LatticeDomain};
use crate::{Error, Result};

/// How per-node conformal radii are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiusMode {
    /// One Dirichlet solve per node.
    Exact,
    /// Distance to the component's crossings times a calibrated factor.
    Koebe { factor: f64 },
}

impl TvsApprox {
    /// Conformal radius of the component containing `node`, seen from `node`.
    pub fn conformal_radius(&self, domain: &LatticeDomain, node: usize) -> Result<f64> {
        let c = self.component_of(node).ok_or(Error::NotInComponent(node))?;
        c.conformal_radius(domain, node)
    }

    /// `log r_𝔻(z) − log r_{𝔻∖A}(z)` at the node nearest to `z`.
    ///
    /// Zero when nothing was cut off from the boundary. A reached node means
    /// `z` sits on the extracted set at lattice resolution.
    pub fn radius_law(&self, domain: &LatticeDomain, z: Point) -> Result<f64> {
        let node = domain
            .nearest_node(z)
            .ok_or_else(|| Error::invalid("z", format!("{z} is not near a lattice node")))?;
        if self.crossings().is_empty() {
            return Ok(0.0);
        }
        if self.is_reached(node) {
            return Err(Error::OnFrontier);
        }
        let p = domain.position(node);
        let r = self.conformal_radius(domain, node)?;
        Ok((disc_conformal_radius(p).ln() - r.ln()).max(0.0))
    }

    /// Distance from the node nearest to `z` to the extracted set: 0 on reached
    /// nodes, otherwise the distance to the closest crossing of its component.
    pub fn distance_to_set(&self, domain: &LatticeDomain, z: Point) -> Result<f64> {
        let node = domain
            .nearest_node(z)
            .ok_or_else(|| Error::invalid("z", format!("{z} is not near a lattice node")))?;
        Ok(match self.component_of(node) {
            Some(c) => c.border_distance(domain.position(node)),
            None => 0.0,
        })
    }

    /// Conformal radius at each of `nodes`; 0 on reached nodes.
    pub fn radii(&self, domain: &LatticeDomain, nodes: &[usize], mode: RadiusMode) -> Result<Vec<f64>> {
        match mode {
            RadiusMode::Exact => nodes
                .iter()
                .map(|&u| match self.component_of(u) {
                    Some(c) => c.conformal_radius(domain, u),
                    None => Ok(0.0),
                })
                .collect(),
            RadiusMode::Koebe { factor } => {
                let dist = self.frontier_distances(domain);
                Ok(nodes
                    .iter()
                    .map(|&u| if self.is_reached(u) { 0.0 } else { factor * dist[u] })
                    .collect())
            }
        }
    }

    /// Conformal radius at every node (0 on reached nodes).
    pub fn radius_field(&self, domain: &LatticeDomain, mode: RadiusMode) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..domain.node_count()).collect();
        self.radii(domain, &all, mode)
    }
}

/// Extract and evaluate [`TvsApprox::radius_law`] in one step.
pub fn radius_law_sample(domain: &LatticeDomain, sample: &GffSample, params: &TvsParams, z: Point) -> Result<f64> {
    extract_tvs(domain, sample, params)?.radius_law(domain, z)
}

/// Geometric mean of `r / dist` over up to `max_nodes` component nodes picked
/// at a fixed stride. Koebe's bounds keep it within `[1, 4]` in the continuum.
pub fn calibrate_koebe_factor(domain: &LatticeDomain, tvs: &TvsApprox, max_nodes: usize) -> Result<f64> {
    let candidates: Vec<usize> = (0..domain.node_count()).filter(|&u| !tvs.is_reached(u)).collect();
    if candidates.is_empty() || max_nodes == 0 {
        return Err(Error::Degenerate("no component nodes to calibrate on".into()));
    }
    let stride = candidates.len().div_ceil(max_nodes);
    let dist = tvs.frontier_distances(domain);
    let mut logs = Vec::new();
    for &u in candidates.iter().step_by(stride) {
        if dist[u] > 0.0 && dist[u].is_finite() {
            logs.push((tvs.conformal_radius(domain, u)? / dist[u]).ln());
        }
    }
    if logs.is_empty() {
        return Err(Error::Degenerate("no usable calibration node".into()));
    }
    Ok((crate::stats::pairwise_sum(&logs) / logs.len() as f64).exp())
}
