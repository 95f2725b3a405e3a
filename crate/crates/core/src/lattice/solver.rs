use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{LatticeDomain, DIRECTIONS, FIELD_SCALE, NONE};
use crate::{Error, Result};

/// A node subset with its Dirichlet graph Laplacian factorised. Every edge
/// leaving the subset, to a ghost or to a node outside, is a Dirichlet edge;
/// its conductance is 1 unless the Dirichlet point sits partway along it.
pub struct Subgraph {
    nodes: Vec<usize>,
    local_neighbors: Vec<[u32; 4]>,
    /// Conductance per leaving edge, 0 for edges inside the subset.
    exits: Vec<[f64; 4]>,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for Subgraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Subgraph").field("nodes", &self.nodes.len()).finish()
    }
}

/// An edge from a subset node to a point just outside the subset.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub inside: usize,
    pub direction: usize,
    pub conductance: f64,
    /// Node on the other end, `None` when it is a ghost outside the disc lattice.
    pub outside_node: Option<usize>,
    pub outside_grid: (i64, i64),
}

impl Subgraph {
    pub fn new(domain: &LatticeDomain, nodes: Vec<usize>) -> Result<Self> {
        Self::build(domain.neighbor_table(), nodes, false, |_, _| 1.0)
    }

    /// Leaving edge `(node, direction)` gets conductance `exit(node, direction)`.
    pub fn with_exit_conductance<F: Fn(usize, usize) -> f64>(
        domain: &LatticeDomain,
        nodes: Vec<usize>,
        exit: F,
    ) -> Result<Self> {
        Self::build(domain.neighbor_table(), nodes, false, exit)
    }

    pub(super) fn build<F: Fn(usize, usize) -> f64>(
        neighbors: &[[u32; 4]],
        mut nodes: Vec<usize>,
        sorted: bool,
        exit: F,
    ) -> Result<Self> {
        if !sorted {
            nodes.sort_unstable();
            nodes.dedup();
        }
        if nodes.is_empty() {
            return Err(Error::Degenerate("empty node subset".into()));
        }
        let local = |g: u32| -> u32 {
            if g == NONE {
                return NONE;
            }
            match nodes.binary_search(&(g as usize)) {
                Ok(k) => k as u32,
                Err(_) => NONE,
            }
        };
        let local_neighbors: Vec<[u32; 4]> = nodes.iter().map(|&g| neighbors[g].map(local)).collect();
        let mut exits = vec![[0.0; 4]; nodes.len()];
        for (u, nb) in local_neighbors.iter().enumerate() {
            for d in 0..4 {
                if nb[d] == NONE {
                    let c = exit(nodes[u], d);
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(Error::invalid("conductance", format!("{c} on a leaving edge")));
                    }
                    exits[u][d] = c;
                }
            }
        }
        let m = nodes.len();
        let mut triplets = Vec::with_capacity(3 * m);
        for (u, nb) in local_neighbors.iter().enumerate() {
            let inside = nb.iter().filter(|&&v| v != NONE).count() as f64;
            triplets.push(Triplet::new(u, u, inside + exits[u].iter().sum::<f64>()));
            for &v in nb {
                if v != NONE && (v as usize) < u {
                    triplets.push(Triplet::new(u, v as usize, -1.0));
                }
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &triplets)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let symbolic = SymbolicLlt::try_new(a.symbolic(), Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, a.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        Ok(Subgraph {
            nodes,
            local_neighbors,
            exits,
            llt,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sorted global node ids; position in this slice is the local index.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn local(&self, node: usize) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    /// Solve `L_S x = rhs` in place (local ordering).
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let m = self.nodes.len();
        assert_eq!(rhs.len(), m);
        self.llt.solve_in_place(MatMut::from_column_major_slice_mut(rhs, m, 1));
    }

    /// Local column of `FIELD_SCALE · L_S⁻¹`.
    pub fn green_column(&self, local: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.nodes.len()];
        x[local] = 1.0;
        self.solve_in_place(&mut x);
        x.iter_mut().for_each(|v| *v *= FIELD_SCALE);
        x
    }

    /// Zero-boundary field on the subset with covariance `FIELD_SCALE · L_S⁻¹`.
    ///
    /// One standard normal per edge: `L_S = EᵀCE` for the edge incidence matrix,
    /// so `L_S⁻¹ EᵀC^{1/2}ξ` has covariance `L_S⁻¹`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.nodes.len();
        let mut y = vec![0.0; m];
        for (u, nb) in self.local_neighbors.iter().enumerate() {
            for (d, &v) in nb.iter().enumerate() {
                let forward = d % 2 == 0;
                if v == NONE {
                    let xi: f64 = rng.sample(StandardNormal);
                    y[u] += self.exits[u][d].sqrt() * xi;
                } else if forward {
                    let xi: f64 = rng.sample(StandardNormal);
                    y[u] += xi;
                    y[v as usize] -= xi;
                }
            }
        }
        self.solve_in_place(&mut y);
        let s = FIELD_SCALE.sqrt();
        y.iter_mut().for_each(|v| *v *= s);
        y
    }

    /// Number of connected pieces of the subset.
    pub fn piece_count(&self) -> usize {
        let m = self.nodes.len();
        let mut seen = vec![false; m];
        let mut pieces = 0;
        let mut stack = Vec::new();
        for s in 0..m {
            if seen[s] {
                continue;
            }
            pieces += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &self.local_neighbors[u] {
                    if v != NONE && !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v as usize);
                    }
                }
            }
        }
        pieces
    }

    /// Edges leaving the subset, in local-node then direction order.
    pub fn boundary_edges<'a>(&'a self, domain: &'a LatticeDomain) -> impl Iterator<Item = (usize, BoundaryEdge)> + 'a {
        self.local_neighbors.iter().enumerate().flat_map(move |(u, nb)| {
            let g = self.nodes[u];
            let (i, j) = domain.grid_coords(g);
            nb.iter().enumerate().filter(|(_, &v)| v == NONE).map(move |(d, _)| {
                let (di, dj) = DIRECTIONS[d];
                (
                    u,
                    BoundaryEdge {
                        inside: g,
                        direction: d,
                        conductance: self.exits[u][d],
                        outside_node: domain.neighbor(g, d),
                        outside_grid: (i + di as i64, j + dj as i64),
                    },
                )
            })
        })
    }

    /// Discrete-harmonic function on the subset with the given values across
    /// each boundary edge.
    pub fn harmonic<F: FnMut(&BoundaryEdge) -> f64>(&self, domain: &LatticeDomain, mut boundary: F) -> Vec<f64> {
        let mut rhs = vec![0.0; self.nodes.len()];
        for (u, e) in self.boundary_edges(domain) {
            rhs[u] += e.conductance * boundary(&e);
        }
        self.solve_in_place(&mut rhs);
        rhs
    }
}

/// Discrete Dirichlet problem on a connected node subset; values are returned in
/// the subset's sorted node order.
pub fn harmonic_extension<F: FnMut(&BoundaryEdge) -> f64>(
    domain: &LatticeDomain,
    nodes: &[usize],
    boundary: F,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let sub = Subgraph::new(domain, nodes.to_vec())?;
    let pieces = sub.piece_count();
    if pieces != 1 {
        return Err(Error::Disconnected(pieces));
    }
    let values = sub.harmonic(domain, boundary);
    Ok((sub.nodes, values))
}
