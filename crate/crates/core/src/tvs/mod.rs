//! Two-valued set extraction by boundary reachability through the band `(−a, b)`,
//! and the complement components with their labels, Green's functions and
//! conformal radii.

mod bridge;
mod component;
mod radius;
mod snapshot;
mod union_find;

pub use bridge::{exit_probability, first_exit};
pub use component::Component;
pub use radius::{calibrate_koebe_factor, radius_law_sample, RadiusMode};
pub use snapshot::{read_snapshot, ComponentRecord, TvsSnapshot};
pub use union_find::UnionFind;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::TvsParams;
use crate::geometry::Point;
use crate::lattice::{GffSample, LatticeDomain, DIRECTIONS, FIELD_SCALE, NONE};
use crate::{Error, Result};

/// Which end of the band a crossing (or a component) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Lower,
    Upper,
}

impl Level {
    pub fn value(self, params: &TvsParams) -> f64 {
        match self {
            Level::Lower => -params.a(),
            Level::Upper => params.b(),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Level::Lower => -1,
            Level::Upper => 1,
        }
    }
}

/// How the field is continued along an edge between its endpoint values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeModel {
    /// Straight line; an edge leaves the band only if an endpoint does.
    #[default]
    Linear,
    /// Brownian bridge keyed by the sample's bridge seed (metric-graph field).
    Bridge,
}

/// Point where the field leaves the band on an edge from the reached region
/// (or a ghost) into an unreached node.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    /// Reached end of the edge, `None` for a ghost.
    pub reached: Option<usize>,
    /// Unreached end of the edge.
    pub cut: usize,
    /// Direction from `cut` toward the reached end.
    pub direction: usize,
    pub point: Point,
    pub level: Level,
    /// `|value(cut) − level|`.
    pub overshoot: f64,
    /// Inverse distance from `cut` to the crossing, in edge lengths.
    pub conductance: f64,
}

#[derive(Debug)]
pub struct TvsApprox {
    params: TvsParams,
    n: usize,
    reached: Vec<bool>,
    component_of: Vec<u32>,
    crossings: Vec<Crossing>,
    components: Vec<Component>,
    frontier_cells: Vec<u32>,
}

fn in_band(v: f64, params: &TvsParams) -> bool {
    v > -params.a() && v < params.b()
}

/// Key of the lattice edge leaving grid point `(i, j)` in direction `d`, the
/// same from both ends.
fn edge_key(side: usize, (i, j): (i64, i64), d: usize) -> u64 {
    let (i, j, vertical) = match d {
        0 => (i, j, 0),
        1 => (i - 1, j, 0),
        2 => (i, j, 1),
        _ => (i, j - 1, 1),
    };
    (((j as u64) * side as u64 + i as u64) << 1) | vertical
}

struct EdgeField<'a> {
    domain: &'a LatticeDomain,
    sample: &'a GffSample,
    params: &'a TvsParams,
    model: EdgeModel,
}

impl EdgeField<'_> {
    /// Does the field stay inside the band along the edge from `u` in direction `d`,
    /// given that both end values `x`, `y` are inside?
    fn passes(&self, u: usize, d: usize, x: f64, y: f64) -> bool {
        match self.model {
            EdgeModel::Linear => true,
            EdgeModel::Bridge => {
                let key = edge_key(self.domain.side(), self.domain.grid_coords(u), d);
                let p = exit_probability(x, y, -self.params.a(), self.params.b(), FIELD_SCALE);
                bridge::edge_uniform(self.sample.bridge_seed(), key) >= p
            }
        }
    }

    /// Crossing on the edge from the reached end (value `vr`, fraction 0) to the
    /// unreached node `u` (value `vu`, fraction 1), reached from `u` in direction `d`.
    fn crossing(&self, u: usize, d: usize, vr: f64, vu: f64) -> (f64, Level) {
        let (lo, hi) = (-self.params.a(), self.params.b());
        match self.model {
            EdgeModel::Linear => {
                let level = if vu >= hi { Level::Upper } else { Level::Lower };
                let lv = level.value(self.params);
                (((lv - vr) / (vu - vr)).clamp(0.0, 1.0), level)
            }
            EdgeModel::Bridge => {
                let key = edge_key(self.domain.side(), self.domain.grid_coords(u), d);
                let mut rng = ChaCha8Rng::seed_from_u64(bridge::edge_hash(self.sample.bridge_seed(), !key));
                let (t, upper) = first_exit(vr, vu, lo, hi, FIELD_SCALE, &mut rng);
                (t, if upper { Level::Upper } else { Level::Lower })
            }
        }
    }
}

/// Nodes connected to the boundary along edges on which the field stays in the band.
fn reach(field: &EdgeField) -> Vec<bool> {
    let (domain, sample, params) = (field.domain, field.sample, field.params);
    let mut reached = vec![false; domain.node_count()];
    let mut queue = VecDeque::new();
    let shift = sample.boundary_shift();
    let table = domain.neighbor_table();
    for u in 0..domain.node_count() {
        let vu = sample.value(u);
        if in_band(vu, params) && (0..4).any(|d| table[u][d] == NONE && field.passes(u, d, shift, vu)) {
            reached[u] = true;
            queue.push_back(u);
        }
    }
    while let Some(u) = queue.pop_front() {
        let vu = sample.value(u);
        for (d, &v) in table[u].iter().enumerate() {
            if v != NONE {
                let v = v as usize;
                if !reached[v] {
                    let vv = sample.value(v);
                    if in_band(vv, params) && field.passes(u, d, vu, vv) {
                        reached[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
    }
    reached
}

fn check_boundary_value(sample: &GffSample, params: &TvsParams) -> Result<()> {
    if !in_band(sample.boundary_shift(), params) {
        return Err(Error::Precondition(format!(
            "boundary value {} lies outside the band (-{}, {})",
            sample.boundary_shift(),
            params.a(),
            params.b()
        )));
    }
    Ok(())
}

/// Extract the two-valued set of `sample` for the levels in `params`, with the
/// field interpolated linearly along edges.
///
/// A lattice with no component at all is not an error; check
/// [`TvsApprox::is_degenerate`].
pub fn extract_tvs(domain: &LatticeDomain, sample: &GffSample, params: &TvsParams) -> Result<TvsApprox> {
    extract_tvs_with(domain, sample, params, EdgeModel::Linear)
}

pub fn extract_tvs_with(
    domain: &LatticeDomain,
    sample: &GffSample,
    params: &TvsParams,
    model: EdgeModel,
) -> Result<TvsApprox> {
    sample.check_domain(domain)?;
    check_boundary_value(sample, params)?;
    let field = EdgeField {
        domain,
        sample,
        params,
        model,
    };
    let reached = reach(&field);
    let shift = sample.boundary_shift();
    let table = domain.neighbor_table();

    let mut crossings = Vec::new();
    for u in 0..domain.node_count() {
        if reached[u] {
            continue;
        }
        let vu = sample.value(u);
        let pu = domain.position(u);
        for (d, &v) in table[u].iter().enumerate() {
            let (other, vr, pr) = if v == NONE {
                let (i, j) = domain.grid_coords(u);
                let (di, dj) = DIRECTIONS[d];
                (None, shift, domain.grid_point(i + di as i64, j + dj as i64))
            } else if reached[v as usize] {
                let v = v as usize;
                (Some(v), sample.value(v), domain.position(v))
            } else {
                continue;
            };
            let (t, level) = field.crossing(u, d, vr, vu);
            crossings.push(Crossing {
                reached: other,
                cut: u,
                direction: d,
                point: pr + (pu - pr) * t,
                level,
                overshoot: (vu - level.value(params)).abs(),
                conductance: 1.0 / (1.0 - t).max(1e-6),
            });
        }
    }
    Ok(TvsApprox::assemble(domain, *params, reached, crossings))
}

impl TvsApprox {
    fn assemble(domain: &LatticeDomain, params: TvsParams, reached: Vec<bool>, crossings: Vec<Crossing>) -> Self {
        let count = domain.node_count();
        let table = domain.neighbor_table();
        let mut component_of = vec![NONE; count];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for s in 0..count {
            if reached[s] || component_of[s] != NONE {
                continue;
            }
            let id = members.len() as u32;
            let mut nodes = vec![s];
            component_of[s] = id;
            let mut k = 0;
            while k < nodes.len() {
                let u = nodes[k];
                k += 1;
                for &v in &table[u] {
                    if v != NONE && !reached[v as usize] && component_of[v as usize] == NONE {
                        component_of[v as usize] = id;
                        nodes.push(v as usize);
                    }
                }
            }
            nodes.sort_unstable();
            members.push(nodes);
        }
        let mut per_component: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
        for (k, c) in crossings.iter().enumerate() {
            per_component[component_of[c.cut] as usize].push(k);
        }
        let components = members
            .into_iter()
            .zip(per_component)
            .enumerate()
            .map(|(id, (nodes, cross))| Component::new(id, nodes, cross, &crossings, &params))
            .collect();

        let n = domain.n();
        let h = domain.h();
        let mut frontier_cells: Vec<u32> = crossings
            .iter()
            .map(|c| {
                let cx = (((c.point.re + 1.0) / h).floor() as i64).clamp(0, n as i64 - 1);
                let cy = (((c.point.im + 1.0) / h).floor() as i64).clamp(0, n as i64 - 1);
                (cy as usize * n + cx as usize) as u32
            })
            .collect();
        frontier_cells.sort_unstable();
        frontier_cells.dedup();

        TvsApprox {
            params,
            n,
            reached,
            component_of,
            crossings,
            components,
            frontier_cells,
        }
    }

    /// Test hook: components given explicitly (`None` marks reached nodes). Each
    /// edge leaving a component is cut at the outside grid point.
    pub fn from_membership(
        domain: &LatticeDomain,
        params: TvsParams,
        membership: &[Option<usize>],
        labels: &[Level],
    ) -> Result<Self> {
        if membership.len() != domain.node_count() {
            return Err(Error::invalid("membership", "one entry per node expected"));
        }
        let reached: Vec<bool> = membership.iter().map(|m| m.is_none()).collect();
        let mut crossings = Vec::new();
        for (u, m) in membership.iter().enumerate() {
            let Some(id) = *m else { continue };
            let level = *labels
                .get(id)
                .ok_or_else(|| Error::invalid("labels", format!("no label for component {id}")))?;
            let (i, j) = domain.grid_coords(u);
            for (d, (di, dj)) in DIRECTIONS.iter().enumerate() {
                let other = domain.neighbor(u, d);
                if other.is_some_and(|v| membership[v].is_some()) {
                    if other.is_some_and(|v| membership[v] != Some(id)) {
                        return Err(Error::invalid("membership", "adjacent nodes in different components"));
                    }
                    continue;
                }
                crossings.push(Crossing {
                    reached: other,
                    cut: u,
                    direction: d,
                    point: domain.grid_point(i + *di as i64, j + *dj as i64),
                    level,
                    overshoot: 0.0,
                    conductance: 1.0,
                });
            }
        }
        Ok(Self::assemble(domain, params, reached, crossings))
    }

    /// Test hook: the whole lattice as one component, cut at the ghosts.
    pub fn whole_domain(domain: &LatticeDomain, params: TvsParams) -> Self {
        let membership = vec![Some(0); domain.node_count()];
        Self::from_membership(domain, params, &membership, &[Level::Upper]).expect("valid membership")
    }

    pub fn params(&self) -> &TvsParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_reached(&self, node: usize) -> bool {
        self.reached[node]
    }

    pub fn reached(&self) -> &[bool] {
        &self.reached
    }

    pub fn reached_count(&self) -> usize {
        self.reached.iter().filter(|&&r| r).count()
    }

    pub fn component_index(&self, node: usize) -> Option<usize> {
        let c = self.component_of[node];
        (c != NONE).then_some(c as usize)
    }

    pub fn component_of(&self, node: usize) -> Option<&Component> {
        self.component_index(node).map(|c| &self.components[c])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// Dual cells `(row · n + column)` holding at least one crossing.
    pub fn frontier_cells(&self) -> &[u32] {
        &self.frontier_cells
    }

    /// Fraction of the disc's dual cells that carry a crossing.
    pub fn frontier_area_fraction(&self, domain: &LatticeDomain) -> f64 {
        self.frontier_cells.len() as f64 / domain.node_count() as f64
    }

    /// No component: every node reaches the boundary.
    pub fn is_degenerate(&self) -> bool {
        self.components.is_empty()
    }

    pub fn mixed_count(&self) -> usize {
        self.components.iter().filter(|c| c.is_mixed()).count()
    }

    pub fn tie_count(&self) -> usize {
        self.components.iter().filter(|c| c.is_tie()).count()
    }

    /// `h_A`: the component label at a node, `None` on reached nodes.
    pub fn harmonic_value(&self, node: usize) -> Option<f64> {
        self.component_of(node).map(|c| c.label_value())
    }

    /// Reached nodes, crossings and the outer boundary form one connected set.
    pub fn check_connectivity(&self, domain: &LatticeDomain) -> bool {
        let count = domain.node_count();
        let ghost = count;
        let mut uf = UnionFind::new(count + 1 + self.crossings.len());
        for u in 0..count {
            if !self.reached[u] {
                continue;
            }
            for d in 0..4 {
                match domain.neighbor(u, d) {
                    None => uf.union(u, ghost),
                    Some(v) if self.reached[v] => uf.union(u, v),
                    Some(_) => {}
                }
            }
        }
        for (k, c) in self.crossings.iter().enumerate() {
            uf.union(count + 1 + k, c.reached.unwrap_or(ghost));
        }
        let root = uf.find(ghost);
        (0..count).filter(|&u| self.reached[u]).all(|u| uf.find(u) == root)
            && (0..self.crossings.len()).all(|k| uf.find(count + 1 + k) == root)
    }

    /// Replace the field inside every component by its label plus a fresh
    /// zero-boundary field of that component; reached nodes keep their values.
    pub fn markov_resample<R: Rng + ?Sized>(
        &self,
        domain: &LatticeDomain,
        sample: &GffSample,
        rng: &mut R,
    ) -> Result<GffSample> {
        self.markov_resample_where(domain, sample, rng, |_| true)
    }

    /// [`markov_resample`](Self::markov_resample) restricted to the components
    /// selected by `keep`; the others keep their sampled values.
    pub fn markov_resample_where<R: Rng + ?Sized, F: Fn(&Component) -> bool>(
        &self,
        domain: &LatticeDomain,
        sample: &GffSample,
        rng: &mut R,
        keep: F,
    ) -> Result<GffSample> {
        sample.check_domain(domain)?;
        let shift = sample.boundary_shift();
        let mut values = sample.fluctuation().to_vec();
        for c in self.components.iter().filter(|c| keep(c)) {
            let fresh = c.subgraph(domain)?.sample(rng);
            let base = c.label_value() - shift;
            for (k, &u) in c.nodes().iter().enumerate() {
                values[u] = base + fresh[k];
            }
        }
        GffSample::from_values(domain, values, shift)
    }

    /// Distance from each node to the nearest crossing of its own component
    /// (0 on reached nodes), by nearest-site propagation.
    pub fn frontier_distances(&self, domain: &LatticeDomain) -> Vec<f64> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        struct Key(f64);
        impl PartialEq for Key {
            fn eq(&self, o: &Self) -> bool {
                self.0.total_cmp(&o.0).is_eq()
            }
        }
        impl Eq for Key {}
        impl PartialOrd for Key {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Key {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&o.0)
            }
        }
        let count = domain.node_count();
        let mut best = vec![f64::INFINITY; count];
        let mut heap = BinaryHeap::new();
        for (k, c) in self.crossings.iter().enumerate() {
            let d = (domain.position(c.cut) - c.point).norm();
            heap.push(Reverse((Key(d), c.cut, k)));
        }
        while let Some(Reverse((Key(d), u, k))) = heap.pop() {
            if d >= best[u] {
                continue;
            }
            best[u] = d;
            let site = self.crossings[k].point;
            for e in 0..4 {
                if let Some(v) = domain.neighbor(u, e) {
                    if self.component_of[v] == self.component_of[u] {
                        let dv = (domain.position(v) - site).norm();
                        if dv < best[v] {
                            heap.push(Reverse((Key(dv), v, k)));
                        }
                    }
                }
            }
        }
        for (b, _) in best.iter_mut().zip(&self.reached).filter(|(_, &r)| r) {
            *b = 0.0;
        }
        best
    }
}

/// Is the reachable set of the narrower band contained in that of the wider one?
pub fn nesting_check(
    domain: &LatticeDomain,
    sample: &GffSample,
    inner: &TvsParams,
    outer: &TvsParams,
    model: EdgeModel,
) -> Result<bool> {
    if !inner.band_within(outer) {
        return Err(Error::Precondition(format!(
            "band (-{}, {}) is not inside (-{}, {})",
            inner.a(),
            inner.b(),
            outer.a(),
            outer.b()
        )));
    }
    sample.check_domain(domain)?;
    check_boundary_value(sample, inner)?;
    let reach_with = |params| {
        reach(&EdgeField {
            domain,
            sample,
            params,
            model,
        })
    };
    let (r1, r2) = (reach_with(inner), reach_with(outer));
    Ok(r1.iter().zip(&r2).all(|(&x, &y)| !x || y))
}
