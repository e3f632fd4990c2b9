//! Graph data model: undirected graphs carrying a positive affinity and a
//! positive cost on every edge, plus the shared linear-algebra objects
//! (transition matrix, Laplacian and its pseudoinverse) the distance
//! families are built from.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::symmetric_pseudoinverse;

/// One undirected edge with its affinity (similarity weight) and traversal cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub affinity: f64,
    pub cost: f64,
}

/// Undirected graph over nodes `0..n` with per-edge affinities and costs.
///
/// Affinities play the role of conductances (they define the natural random
/// walk) while costs play the role of resistances. The two may be assigned
/// independently; when no cost is given, the reciprocal of the affinity is
/// used.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct CostedGraph {
    n: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<(usize, f64, f64)>>,
    connected: bool,
}

impl CostedGraph {
    /// Build a graph from `(u, v, affinity, cost)` tuples, one per undirected edge.
    pub fn new(n: usize, raw: &[(usize, usize, f64, f64)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(raw.len());
        let mut seen = std::collections::HashSet::new();
        for &(u, v, a, c) in raw {
            if u >= n {
                return Err(Error::NodeOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    u,
                    v,
                    what: "affinity",
                    value: a,
                });
            }
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    u,
                    v,
                    what: "cost",
                    value: c,
                });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            edges.push(Edge {
                u: key.0,
                v: key.1,
                affinity: a,
                cost: c,
            });
        }
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.u].push((e.v, e.affinity, e.cost));
            neighbors[e.v].push((e.u, e.affinity, e.cost));
        }
        for nbrs in &mut neighbors {
            nbrs.sort_by_key(|&(v, _, _)| v);
        }
        let connected = bfs_connected(n, &neighbors);
        Ok(CostedGraph {
            n,
            edges,
            neighbors,
            connected,
        })
    }

    /// Build from `(u, v, affinity)` tuples with the reciprocal cost convention c = 1/a.
    pub fn from_affinities(n: usize, raw: &[(usize, usize, f64)]) -> Result<Self> {
        let with_costs: Vec<_> = raw.iter().map(|&(u, v, a)| (u, v, a, 1.0 / a)).collect();
        Self::new(n, &with_costs)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Neighbors of `u` as `(v, affinity, cost)`, sorted by node id.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64, f64)] {
        &self.neighbors[u]
    }

    /// Weighted degree: sum of affinities at `u`.
    pub fn degree(&self, u: usize) -> f64 {
        self.neighbors[u].iter().map(|&(_, a, _)| a).sum()
    }

    /// Dense symmetric affinity matrix with zero diagonal.
    pub fn affinity_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.u, e.v)] = e.affinity;
            a[(e.v, e.u)] = e.affinity;
        }
        a
    }

    /// Dense cost matrix; entries off the edge set are exactly zero.
    ///
    /// Non-edges carry no cost placeholder: the killed-walk product that
    /// consumes this matrix is zero off-edges anyway, so an exact zero mask is
    /// equivalent to an arbitrarily large cost and cannot overflow.
    pub fn cost_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            c[(e.u, e.v)] = e.cost;
            c[(e.v, e.u)] = e.cost;
        }
        c
    }

    fn require_connected(&self) -> Result<()> {
        if !self.connected {
            return Err(Error::Disconnected);
        }
        Ok(())
    }
}

fn bfs_connected(n: usize, neighbors: &[Vec<(usize, f64, f64)>]) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &(v, _, _) in &neighbors[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Row-stochastic transition matrix of the natural random walk,
/// p[i][j] = a_ij / sum_k a_ik.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }
}

pub fn transition_matrix(g: &CostedGraph) -> Result<TransitionMatrix> {
    let n = g.node_count();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = g.degree(i);
        if d <= 0.0 {
            return Err(Error::IsolatedNode(i));
        }
        for &(j, a, _) in g.neighbors(i) {
            p[(i, j)] = a / d;
        }
    }
    Ok(TransitionMatrix { p })
}

/// The graph Laplacian L = D - A together with its Moore-Penrose pseudoinverse
/// and the two scalar totals every commute-type distance needs.
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    pub l: DMatrix<f64>,
    pub lplus: DMatrix<f64>,
    /// Sum of all affinities, counting both directions: e^T A e.
    pub volume: f64,
    /// Affinity-weighted cost total: e^T (A o C) e.
    pub cost_volume: f64,
}

pub fn laplacian_pair(g: &CostedGraph) -> Result<LaplacianPair> {
    g.require_connected()?;
    let n = g.node_count();
    let a = g.affinity_matrix();
    let mut l = -a.clone();
    for i in 0..n {
        l[(i, i)] = g.degree(i);
    }
    let lplus = symmetric_pseudoinverse(&l, |zero_count| {
        if zero_count != 1 {
            Some(Error::Disconnected)
        } else {
            None
        }
    })?;
    let mut volume = 0.0;
    let mut cost_volume = 0.0;
    for e in g.edges() {
        volume += 2.0 * e.affinity;
        cost_volume += 2.0 * e.affinity * e.cost;
    }
    Ok(LaplacianPair {
        l,
        lplus,
        volume,
        cost_volume,
    })
}

/// Built-in small graphs used across the toolkit and the test suites.
pub mod fixtures {
    use super::CostedGraph;

    /// Two nodes joined by a unit edge.
    pub fn k2() -> CostedGraph {
        CostedGraph::new(2, &[(0, 1, 1.0, 1.0)]).unwrap()
    }

    /// Unit path 0 - 1 - 2.
    pub fn path3() -> CostedGraph {
        CostedGraph::new(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)]).unwrap()
    }

    /// A 3-clique {1, 2, 3} with a pendant node 0 attached to node 1.
    /// All affinities and costs are 1.
    pub fn ext_triangle() -> CostedGraph {
        CostedGraph::new(
            4,
            &[
                (0, 1, 1.0, 1.0),
                (1, 2, 1.0, 1.0),
                (1, 3, 1.0, 1.0),
                (2, 3, 1.0, 1.0),
            ],
        )
        .unwrap()
    }

    /// A 4-clique {0, 1, 2, 3} and a 3-clique {5, 6, 7} joined by a hub node 4
    /// adjacent to every other node. All affinities and costs are 1.
    pub fn hub_4_3() -> CostedGraph {
        let mut edges = Vec::new();
        for i in 0..4usize {
            for j in (i + 1)..4 {
                edges.push((i, j, 1.0, 1.0));
            }
        }
        for i in 5..8usize {
            for j in (i + 1)..8 {
                edges.push((i, j, 1.0, 1.0));
            }
        }
        for v in [0usize, 1, 2, 3, 5, 6, 7] {
            edges.push((v.min(4), v.max(4), 1.0, 1.0));
        }
        CostedGraph::new(8, &edges).unwrap()
    }

    /// Two 3-cliques {0,1,2} and {4,5,6} glued at the cut vertex 3; every path
    /// between the cliques passes through node 3.
    pub fn barbell7() -> CostedGraph {
        let mut edges = Vec::new();
        for grp in [[0usize, 1, 2], [4, 5, 6]] {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    edges.push((grp[i], grp[j], 1.0, 1.0));
                }
            }
            for &v in &grp {
                edges.push((v.min(3), v.max(3), 1.0, 1.0));
            }
        }
        CostedGraph::new(7, &edges).unwrap()
    }

    /// Look a fixture up by its CLI name.
    pub fn by_name(name: &str) -> Option<CostedGraph> {
        match name {
            "k2" => Some(k2()),
            "path-3" => Some(path3()),
            "ext-triangle" => Some(ext_triangle()),
            "hub-4-3" => Some(hub_4_3()),
            "barbell-7" => Some(barbell7()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loop_and_duplicates() {
        assert!(matches!(
            CostedGraph::new(2, &[(0, 0, 1.0, 1.0)]),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            CostedGraph::new(2, &[(0, 1, 1.0, 1.0), (1, 0, 2.0, 1.0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            CostedGraph::new(2, &[(0, 1, -1.0, 1.0)]),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            CostedGraph::new(2, &[(0, 1, 1.0, 0.0)]),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn connectivity_flag() {
        let g = CostedGraph::new(3, &[(0, 1, 1.0, 1.0)]).unwrap();
        assert!(!g.is_connected());
        assert!(fixtures::ext_triangle().is_connected());
    }

    #[test]
    fn transition_rows_sum_to_one() {
        for g in [
            fixtures::k2(),
            fixtures::path3(),
            fixtures::ext_triangle(),
            fixtures::hub_4_3(),
        ] {
            let p = transition_matrix(&g).unwrap();
            for i in 0..g.node_count() {
                let s: f64 = p.matrix().row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
            }
        }
    }

    #[test]
    fn transition_path_and_k2_rows() {
        let p = transition_matrix(&fixtures::k2()).unwrap();
        assert_eq!(p.matrix()[(0, 1)], 1.0);
        assert_eq!(p.matrix()[(1, 0)], 1.0);
        let p = transition_matrix(&fixtures::path3()).unwrap();
        assert_eq!(p.matrix()[(1, 0)], 0.5);
        assert_eq!(p.matrix()[(1, 1)], 0.0);
        assert_eq!(p.matrix()[(1, 2)], 0.5);
    }

    #[test]
    fn transition_star_weights() {
        // star center 0 with leaf weights 1 and 3
        let g = CostedGraph::new(3, &[(0, 1, 1.0, 1.0), (0, 2, 3.0, 1.0)]).unwrap();
        let p = transition_matrix(&g).unwrap();
        assert!((p.matrix()[(0, 1)] - 0.25).abs() < 1e-15);
        assert!((p.matrix()[(0, 2)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn k2_laplacian_and_pseudoinverse() {
        let lp = laplacian_pair(&fixtures::k2()).unwrap();
        assert_eq!(lp.l[(0, 0)], 1.0);
        assert_eq!(lp.l[(0, 1)], -1.0);
        for (i, j, want) in [(0, 0, 0.25), (0, 1, -0.25), (1, 0, -0.25), (1, 1, 0.25)] {
            assert!((lp.lplus[(i, j)] - want).abs() < 1e-12);
        }
        assert_eq!(lp.volume, 2.0);
    }

    #[test]
    fn ext_triangle_volume() {
        let lp = laplacian_pair(&fixtures::ext_triangle()).unwrap();
        assert_eq!(lp.volume, 8.0);
        assert_eq!(lp.cost_volume, 8.0);
    }

    #[test]
    fn lplus_annihilates_ones() {
        let lp = laplacian_pair(&fixtures::hub_4_3()).unwrap();
        let ones = nalgebra::DVector::from_element(8, 1.0);
        let r = &lp.lplus * &ones;
        assert!(r.amax() < 1e-10);
    }

    #[test]
    fn laplacian_pair_rejects_disconnected() {
        let g = CostedGraph::new(4, &[(0, 1, 1.0, 1.0), (2, 3, 1.0, 1.0)]).unwrap();
        assert!(matches!(laplacian_pair(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn laplacian_plus_affinity_rows_equal_degrees() {
        let g = fixtures::hub_4_3();
        let lp = laplacian_pair(&g).unwrap();
        let sum = &lp.l + g.affinity_matrix();
        for i in 0..8 {
            let row: f64 = sum.row(i).iter().sum();
            assert_eq!(row, g.degree(i));
        }
    }
}
