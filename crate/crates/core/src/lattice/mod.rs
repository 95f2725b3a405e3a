//! Square-lattice discretisation of the unit disc: graph Laplacian with Dirichlet
//! ghosts, sparse Cholesky solves, field sampling, circle averages and
//! harmonic extension.

mod circle;
mod snapshot;
mod solver;

pub use circle::{circle_average, circle_kappa, pointwise_kappa, CircleStencil, MIN_EPS_SPACINGS};
pub use solver::{harmonic_extension, BoundaryEdge, Subgraph};

use std::f64::consts::TAU;

use rand::Rng;

use crate::geometry::{point, Point, Region};
use crate::{Error, Result};

pub const MIN_RESOLUTION: usize = 16;
/// Largest lattice we agree to build (about 3.1 million nodes).
pub const MAX_RESOLUTION: usize = 2000;

/// Variance multiplier turning the inverse graph Laplacian into the disc Green's
/// function normalised as `G(0, w) = −log|w|`.
pub const FIELD_SCALE: f64 = TAU;

pub(crate) const NONE: u32 = u32::MAX;

/// Neighbour offsets in the order used everywhere: +x, −x, +y, −y.
pub const DIRECTIONS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Grid points `−1 + (i, j)·h`, `h = 2/n`, kept when `|z| ≤ 1 − h/2`.
pub struct LatticeDomain {
    n: usize,
    h: f64,
    node_of_grid: Vec<u32>,
    grid_of_node: Vec<(u32, u32)>,
    neighbors: Vec<[u32; 4]>,
    full: Subgraph,
}

impl std::fmt::Debug for LatticeDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeDomain")
            .field("n", &self.n)
            .field("nodes", &self.node_count())
            .finish()
    }
}

impl LatticeDomain {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_RESOLUTION {
            return Err(Error::ResolutionTooSmall { n, min: MIN_RESOLUTION });
        }
        let side = n + 1;
        let estimate = (std::f64::consts::PI * (n * n) as f64 / 4.0) as usize;
        if n > MAX_RESOLUTION {
            return Err(Error::Resource { nodes: estimate });
        }
        let h = 2.0 / n as f64;
        let mut node_of_grid = Vec::new();
        node_of_grid
            .try_reserve_exact(side * side)
            .map_err(|_| Error::Resource { nodes: estimate })?;
        node_of_grid.resize(side * side, NONE);
        let mut grid_of_node = Vec::new();
        grid_of_node
            .try_reserve(estimate + side)
            .map_err(|_| Error::Resource { nodes: estimate })?;
        let limit = 1.0 - 0.5 * h;
        for j in 0..side {
            for i in 0..side {
                let z = point(-1.0 + i as f64 * h, -1.0 + j as f64 * h);
                if z.norm() <= limit {
                    node_of_grid[j * side + i] = grid_of_node.len() as u32;
                    grid_of_node.push((i as u32, j as u32));
                }
            }
        }
        let neighbors = grid_of_node
            .iter()
            .map(|&(i, j)| {
                DIRECTIONS.map(|(di, dj)| {
                    let (ii, jj) = (i as i64 + di as i64, j as i64 + dj as i64);
                    if ii < 0 || jj < 0 || ii >= side as i64 || jj >= side as i64 {
                        NONE
                    } else {
                        node_of_grid[jj as usize * side + ii as usize]
                    }
                })
            })
            .collect::<Vec<_>>();
        let count = grid_of_node.len();
        let full = Subgraph::build(&neighbors, (0..count).collect(), true, |_, _| 1.0)?;
        log::debug!("built lattice n = {n} with {count} nodes");
        Ok(LatticeDomain {
            n,
            h,
            node_of_grid,
            grid_of_node,
            neighbors,
            full,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.grid_of_node.len()
    }

    /// Points per grid row, `n + 1`.
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn grid_point(&self, i: i64, j: i64) -> Point {
        point(-1.0 + i as f64 * self.h, -1.0 + j as f64 * self.h)
    }

    pub fn position(&self, node: usize) -> Point {
        let (i, j) = self.grid_of_node[node];
        self.grid_point(i as i64, j as i64)
    }

    pub fn grid_coords(&self, node: usize) -> (i64, i64) {
        let (i, j) = self.grid_of_node[node];
        (i as i64, j as i64)
    }

    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let side = self.side() as i64;
        if i < 0 || j < 0 || i >= side || j >= side {
            return None;
        }
        let v = self.node_of_grid[(j * side + i) as usize];
        (v != NONE).then_some(v as usize)
    }

    /// Grid coordinates of the grid point closest to `z`.
    pub fn nearest_grid(&self, z: Point) -> (i64, i64) {
        (
            ((z.re + 1.0) / self.h).round() as i64,
            ((z.im + 1.0) / self.h).round() as i64,
        )
    }

    pub fn nearest_node(&self, z: Point) -> Option<usize> {
        let (i, j) = self.nearest_grid(z);
        self.node_at(i, j)
    }

    /// Nodes whose position lies in `region`, ascending.
    pub fn nodes_in(&self, region: &Region) -> Vec<usize> {
        let c = region.center();
        let r = region.outer_radius();
        let (i0, j0) = self.nearest_grid(c - point(r, r));
        let (i1, j1) = self.nearest_grid(c + point(r, r));
        let mut out = Vec::new();
        for j in j0 - 1..=j1 + 1 {
            for i in i0 - 1..=i1 + 1 {
                if let Some(v) = self.node_at(i, j) {
                    if region.contains(self.position(v)) {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Neighbour in direction `d` (index into [`DIRECTIONS`]), `None` for a ghost.
    pub fn neighbor(&self, node: usize, d: usize) -> Option<usize> {
        let v = self.neighbors[node][d];
        (v != NONE).then_some(v as usize)
    }

    pub(crate) fn neighbor_table(&self) -> &[[u32; 4]] {
        &self.neighbors
    }

    pub fn has_ghost_neighbor(&self, node: usize) -> bool {
        self.neighbors[node].contains(&NONE)
    }

    /// The subgraph of all nodes, with the factorised Laplacian.
    pub fn full(&self) -> &Subgraph {
        &self.full
    }

    /// `Lx` for the graph Laplacian (diagonal 4, −1 per interior neighbour).
    pub fn apply_laplacian(&self, x: &[f64]) -> Vec<f64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(u, nb)| 4.0 * x[u] - nb.iter().filter(|&&v| v != NONE).map(|&v| x[v as usize]).sum::<f64>())
            .collect()
    }

    /// Zero-boundary field with covariance `FIELD_SCALE · L⁻¹`.
    pub fn sample_gff<R: Rng + ?Sized>(&self, rng: &mut R) -> GffSample {
        let values = self.full.sample(rng);
        GffSample {
            n: self.n,
            values,
            boundary_shift: 0.0,
            bridge_seed: rng.random(),
        }
    }

    /// Runs `f` on `samples` independent fields, sample `k` drawn from task
    /// stream `k`. Results come back in task order whatever the thread count.
    pub fn sample_ensemble<T, F>(&self, samples: usize, seed: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &GffSample) -> Result<T> + Sync,
    {
        use rayon::prelude::*;
        (0..samples as u64)
            .into_par_iter()
            .map(|k| {
                let s = self.sample_gff(&mut crate::rng::task_rng(seed, k));
                f(k, &s)
            })
            .collect()
    }

    /// Column `w` of the scaled discrete Green's function.
    pub fn green_column(&self, w: usize) -> Vec<f64> {
        self.full.green_column(w)
    }

    pub fn discrete_green(&self, z: usize, w: usize) -> f64 {
        self.green_column(w)[z]
    }

    /// Ratio of the disc Green's function to the lattice one, averaged over
    /// pairs of nodes. Confirms `FIELD_SCALE` rather than setting it.
    pub fn calibrate_field_scale(&self, pairs: &[(Point, Point)]) -> Result<f64> {
        let mut ratios = Vec::with_capacity(pairs.len());
        for &(z, w) in pairs {
            let (nz, nw) = match (self.nearest_node(z), self.nearest_node(w)) {
                (Some(a), Some(b)) if a != b => (a, b),
                _ => {
                    return Err(Error::invalid(
                        "pairs",
                        format!("{z}, {w} do not map to distinct nodes"),
                    ))
                }
            };
            let lat = self.discrete_green(nz, nw) / FIELD_SCALE;
            let cont = crate::analytic::disc_green(self.position(nz), self.position(nw))?;
            ratios.push(cont / lat);
        }
        Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

pub fn build_domain(n: usize) -> Result<LatticeDomain> {
    LatticeDomain::new(n)
}

/// One field on a lattice: zero-boundary values per node plus a constant
/// boundary value added everywhere. `bridge_seed` keys the Brownian bridges
/// that fill in the field along each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GffSample {
    n: usize,
    values: Vec<f64>,
    boundary_shift: f64,
    bridge_seed: u64,
}

impl GffSample {
    pub fn from_values(domain: &LatticeDomain, values: Vec<f64>, boundary_shift: f64) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::invalid(
                "values",
                format!("expected {} node values, got {}", domain.node_count(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || !boundary_shift.is_finite() {
            return Err(Error::invalid("values", "must be finite"));
        }
        Ok(GffSample {
            n: domain.n(),
            values,
            boundary_shift,
            bridge_seed: 0,
        })
    }

    pub fn zero(domain: &LatticeDomain) -> Self {
        GffSample {
            n: domain.n(),
            values: vec![0.0; domain.node_count()],
            boundary_shift: 0.0,
            bridge_seed: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary_shift(&self) -> f64 {
        self.boundary_shift
    }

    pub fn with_boundary_shift(mut self, shift: f64) -> Self {
        self.boundary_shift = shift;
        self
    }

    pub fn bridge_seed(&self) -> u64 {
        self.bridge_seed
    }

    pub fn with_bridge_seed(mut self, seed: u64) -> Self {
        self.bridge_seed = seed;
        self
    }

    /// Zero-boundary part.
    pub fn fluctuation(&self) -> &[f64] {
        &self.values
    }

    /// Field value at a node, boundary value included.
    pub fn value(&self, node: usize) -> f64 {
        self.values[node] + self.boundary_shift
    }

    /// Field value at a grid point; points outside the lattice carry the boundary value.
    pub fn grid_value(&self, domain: &LatticeDomain, i: i64, j: i64) -> f64 {
        match domain.node_at(i, j) {
            Some(v) => self.value(v),
            None => self.boundary_shift,
        }
    }

    pub(crate) fn check_domain(&self, domain: &LatticeDomain) -> Result<()> {
        if self.n != domain.n() || self.values.len() != domain.node_count() {
            return Err(Error::invalid(
                "sample",
                format!("sample lattice n = {} does not match domain n = {}", self.n, domain.n()),
            ));
        }
        Ok(())
    }
}
