use std::sync::OnceLock;

use super::{Crossing, Level};
use crate::analytic::TvsParams;
use crate::geometry::Point;
use crate::lattice::{LatticeDomain, Subgraph};
use crate::{Error, Result};

/// A connected set of unreached nodes together with the crossings on its border.
#[derive(Debug)]
pub struct Component {
    id: usize,
    nodes: Vec<usize>,
    label: Level,
    label_value: f64,
    mixed: bool,
    tie: bool,
    /// `(local node index, direction, crossing point, conductance)` per border edge.
    border: Vec<(usize, usize, crate::geometry::Point, f64)>,
    subgraph: OnceLock<Subgraph>,
}

impl Component {
    pub(super) fn new(
        id: usize,
        nodes: Vec<usize>,
        crossing_ids: Vec<usize>,
        crossings: &[Crossing],
        params: &TvsParams,
    ) -> Self {
        let (mut count, mut weight) = ([0usize; 2], [0.0f64; 2]);
        let mut border = Vec::with_capacity(crossing_ids.len());
        for &k in &crossing_ids {
            let c = &crossings[k];
            let slot = usize::from(c.level == Level::Upper);
            count[slot] += 1;
            weight[slot] += c.overshoot;
            let local = nodes.binary_search(&c.cut).expect("crossing belongs to component");
            border.push((local, c.direction, c.point, c.conductance));
        }
        let mixed = count[0] > 0 && count[1] > 0;
        let tie = count[0] == count[1] && mixed;
        // majority; ties by total overshoot, then toward the upper level
        let label = if count[1] != count[0] {
            if count[1] > count[0] {
                Level::Upper
            } else {
                Level::Lower
            }
        } else if weight[0] > weight[1] {
            Level::Lower
        } else {
            Level::Upper
        };
        Component {
            id,
            nodes,
            label,
            label_value: label.value(params),
            mixed,
            tie,
            border,
            subgraph: OnceLock::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Sorted node ids.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn label(&self) -> Level {
        self.label
    }

    pub fn label_value(&self) -> f64 {
        self.label_value
    }

    /// Border crossings disagree on the level.
    pub fn is_mixed(&self) -> bool {
        self.mixed
    }

    /// Both levels crossed equally often; the label came from the tie-break.
    pub fn is_tie(&self) -> bool {
        self.tie
    }

    pub fn border_len(&self) -> usize {
        self.border.len()
    }

    /// Distance from `z` to the nearest crossing point on the component's border.
    pub fn border_distance(&self, z: Point) -> f64 {
        self.border
            .iter()
            .map(|b| (b.2 - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Factorised Dirichlet Laplacian of the component, built on first use.
    pub fn subgraph(&self, domain: &LatticeDomain) -> Result<&Subgraph> {
        if let Some(s) = self.subgraph.get() {
            return Ok(s);
        }
        let mut exits = vec![[1.0; 4]; self.nodes.len()];
        for &(u, d, _, c) in &self.border {
            exits[u][d] = c;
        }
        let s = Subgraph::with_exit_conductance(domain, self.nodes.clone(), |g, d| {
            self.nodes.binary_search(&g).map_or(1.0, |u| exits[u][d])
        })?;
        // another thread may have won the race; either value is identical
        let _ = self.subgraph.set(s);
        Ok(self.subgraph.get().expect("just set"))
    }

    fn local(&self, node: usize) -> Result<usize> {
        self.nodes.binary_search(&node).map_err(|_| Error::NotInComponent(node))
    }

    /// Conformal radius of the component seen from `node`: `exp u(z)` for the
    /// discrete harmonic `u` with border data `log|ζ − z|`.
    pub fn conformal_radius(&self, domain: &LatticeDomain, node: usize) -> Result<f64> {
        let k = self.local(node)?;
        let z = domain.position(node);
        let mut rhs = vec![0.0; self.nodes.len()];
        for &(u, _, zeta, c) in &self.border {
            rhs[u] += c * (zeta - z).norm().ln();
        }
        self.subgraph(domain)?.solve_in_place(&mut rhs);
        Ok(rhs[k].exp())
    }

    /// Green's function of the component from `node`, in component node order.
    pub fn green_column(&self, domain: &LatticeDomain, node: usize) -> Result<Vec<f64>> {
        let k = self.local(node)?;
        Ok(self.subgraph(domain)?.green_column(k))
    }

    pub fn green_at(&self, domain: &LatticeDomain, z: usize, w: usize) -> Result<f64> {
        let kz = self.local(z)?;
        Ok(self.green_column(domain, w)?[kz])
    }

    pub fn local_index(&self, node: usize) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }
}
