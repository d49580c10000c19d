//! Undirected frameworks: edge ordering, incidence matrix and weighted Laplacians.
//!
//! Nodes are 0-based internally. Every undirected pair is stored once with the
//! smaller index as head and the larger as tail, in the order the edges were
//! supplied.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::lift;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one node")]
    Empty,
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected: node {0} unreachable from node 1")]
    DisconnectedGraph(usize),
    #[error("missing weight for edge ({0}, {1})")]
    MissingWeight(usize, usize),
    #[error("({0}, {1}) is not an edge of the graph")]
    UnknownEdge(usize, usize),
}

/// One column of the incidence matrix. `head < tail`, both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
}

impl Edge {
    /// The endpoint that is not `node`, if `node` is incident.
    pub fn other(&self, node: usize) -> Option<usize> {
        if node == self.head {
            Some(self.tail)
        } else if node == self.tail {
            Some(self.head)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkGraph {
    n: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<usize>>,
}

impl FrameworkGraph {
    /// Builds a framework graph from 1-based node pairs.
    pub fn from_one_based(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        for &(a, b) in pairs {
            for node in [a, b] {
                if node == 0 || node > n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
        }
        let zero: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        Self::new(n, &zero)
    }

    /// Builds a framework graph from 0-based node pairs. Errors report 1-based nodes.
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(pairs.len());
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in pairs {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node: node + 1, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a + 1));
            }
            let edge = Edge { head: a.min(b), tail: a.max(b) };
            if !seen.insert((edge.head, edge.tail)) {
                return Err(GraphError::DuplicateEdge(edge.head + 1, edge.tail + 1));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
            edges.push(edge);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let graph = Self { n, edges, neighbors };
        graph.check_connected()?;
        Ok(graph)
    }

    /// Complete graph on `n` nodes, edges in lexicographic order.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::new(n, &pairs)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(node) = queue.pop_front() {
            for &next in &self.neighbors[node] {
                if !visited[next] {
                    visited[next] = true;
                    queue.push_back(next);
                }
            }
        }
        match visited.iter().position(|v| !v) {
            Some(missing) => Err(GraphError::DisconnectedGraph(missing + 1)),
            None => Ok(()),
        }
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

    /// Sorted neighbor list of `node` (0-based).
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Column index of the undirected pair `{a, b}` (0-based).
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (head, tail) = (a.min(b), a.max(b));
        self.edges.iter().position(|e| e.head == head && e.tail == tail)
    }

    /// Edge list as 1-based `(head, tail)` pairs.
    pub fn one_based_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.head + 1, e.tail + 1)).collect()
    }

    /// `B`, with `+1` on the tail row and `-1` on the head row of every column.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            b[(e.tail, k)] = 1.0;
            b[(e.head, k)] = -1.0;
        }
        IncidenceMatrix(b)
    }

    /// Weighted Laplacian from one weight per edge (indexed like `edges()`).
    pub fn laplacian(&self, weights: &[f64]) -> Result<DMatrix<f64>, GraphError> {
        if weights.len() < self.edges.len() {
            let e = self.edges[weights.len()];
            return Err(GraphError::MissingWeight(e.head + 1, e.tail + 1));
        }
        let mut l = DMatrix::zeros(self.n, self.n);
        for (e, &w) in self.edges.iter().zip(weights) {
            l[(e.head, e.head)] += w;
            l[(e.tail, e.tail)] += w;
            l[(e.head, e.tail)] -= w;
            l[(e.tail, e.head)] -= w;
        }
        Ok(l)
    }

    /// Orders `(i, j, w)` triples (1-based, either orientation) into a per-edge weight vector.
    pub fn weights_from_triples(&self, triples: &[(usize, usize, f64)]) -> Result<Vec<f64>, GraphError> {
        let mut weights: Vec<Option<f64>> = vec![None; self.edges.len()];
        for &(i, j, w) in triples {
            if i == 0 || j == 0 || i > self.n || j > self.n {
                return Err(GraphError::NodeOutOfRange { node: i.max(j).max(1), n: self.n });
            }
            let k = self.edge_index(i - 1, j - 1).ok_or(GraphError::UnknownEdge(i, j))?;
            weights[k] = Some(w);
        }
        weights
            .iter()
            .zip(&self.edges)
            .map(|(w, e)| w.ok_or(GraphError::MissingWeight(e.head + 1, e.tail + 1)))
            .collect()
    }
}

/// Node-by-edge incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(DMatrix<f64>);

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `B ⊗ I_m`.
    pub fn lifted(&self, m: usize) -> DMatrix<f64> {
        lift(&self.0, m)
    }

    pub fn rank(&self) -> usize {
        self.0.rank(1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn printed_edge_list_builds() {
        let g = FrameworkGraph::from_one_based(8, presets::PRINTED_EDGES).unwrap();
        assert_eq!(g.edge_count(), 15);
        // (1,4), (2,4), (4,5), (4,6), (4,8)
        assert_eq!(g.neighbors(3), &[0, 1, 4, 5, 7]);
    }

    #[test]
    fn smallest_connected_graph() {
        let g = FrameworkGraph::from_one_based(2, &[(1, 2)]).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn rejects_disconnected_duplicate_and_loops() {
        assert_eq!(
            FrameworkGraph::from_one_based(4, &[(1, 2), (3, 4)]),
            Err(GraphError::DisconnectedGraph(3))
        );
        assert_eq!(
            FrameworkGraph::from_one_based(3, &[(1, 2), (2, 1), (2, 3)]),
            Err(GraphError::DuplicateEdge(1, 2))
        );
        assert_eq!(FrameworkGraph::from_one_based(2, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert!(matches!(
            FrameworkGraph::from_one_based(2, &[(1, 3)]),
            Err(GraphError::NodeOutOfRange { node: 3, n: 2 })
        ));
    }

    #[test]
    fn single_edge_incidence_column() {
        let g = FrameworkGraph::from_one_based(2, &[(1, 2)]).unwrap();
        let b = g.incidence_matrix();
        assert_eq!(b.matrix().column(0).as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn printed_framework_incidence_columns_sum_to_zero() {
        let g = FrameworkGraph::from_one_based(8, presets::PRINTED_EDGES).unwrap();
        let b = g.incidence_matrix();
        assert_eq!(b.matrix().shape(), (8, 15));
        for col in b.matrix().column_iter() {
            assert_eq!(col.sum(), 0.0);
        }
    }

    #[test]
    fn path_incidence_rank() {
        // rank(B) = n - #components = 2; by elimination the two columns
        // (-1, 1, 0) and (0, -1, 1) are independent.
        let g = FrameworkGraph::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(g.incidence_matrix().rank(), 2);
    }

    #[test]
    fn laplacian_examples() {
        let g = FrameworkGraph::from_one_based(2, &[(1, 2)]).unwrap();
        let l = g.laplacian(&[1.0]).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let tri = FrameworkGraph::from_one_based(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        assert_eq!(tri.laplacian(&[0.0; 3]).unwrap(), DMatrix::zeros(3, 3));
        // Characteristic polynomial of [[2,-1,-1],[-1,2,-1],[-1,-1,2]] is -λ(λ-3)^2.
        let eig = crate::linalg::sorted_eigenvalues(&tri.laplacian(&[1.0; 3]).unwrap());
        assert_relative_eq!(eig[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(eig[2], 3.0, epsilon = 1e-12);

        assert_eq!(tri.laplacian(&[1.0]), Err(GraphError::MissingWeight(2, 3)));
    }

    #[test]
    fn weights_from_triples_accepts_either_orientation() {
        let g = FrameworkGraph::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        let w = g.weights_from_triples(&[(3, 2, 0.5), (1, 2, 2.0)]).unwrap();
        assert_eq!(w, vec![2.0, 0.5]);
        assert_eq!(g.weights_from_triples(&[(1, 2, 2.0)]), Err(GraphError::MissingWeight(2, 3)));
        assert_eq!(g.weights_from_triples(&[(1, 3, 2.0)]), Err(GraphError::UnknownEdge(1, 3)));
    }

    fn random_connected_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<f64>)> {
        (2usize..=10)
            .prop_flat_map(|n| {
                let parents: Vec<BoxedStrategy<usize>> =
                    (1..n).map(|i| (0..i).boxed()).collect();
                let extra = proptest::collection::vec((0..n, 0..n), 0..12);
                (Just(n), parents, extra)
            })
            .prop_flat_map(|(n, parents, extra)| {
                let mut set = BTreeSet::new();
                for (i, p) in parents.iter().enumerate() {
                    set.insert((*p, i + 1));
                }
                for (a, b) in extra {
                    if a != b {
                        set.insert((a.min(b), a.max(b)));
                    }
                }
                let pairs: Vec<(usize, usize)> = set.into_iter().collect();
                let len = pairs.len();
                (Just(n), Just(pairs), proptest::collection::vec(-3.0f64..3.0, len))
            })
    }

    proptest! {
        #[test]
        fn incidence_and_laplacian_identities((n, pairs, w) in random_connected_graph()) {
            let g = FrameworkGraph::new(n, &pairs).unwrap();
            let b = g.incidence_matrix();
            for col in b.matrix().column_iter() {
                prop_assert_eq!(col.sum(), 0.0);
                prop_assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
                prop_assert_eq!(col.iter().filter(|&&x| x == -1.0).count(), 1);
            }
            let l = g.laplacian(&w).unwrap();
            prop_assert_eq!(&l, &l.transpose());
            prop_assert!((&l * DMatrix::from_element(n, 1, 1.0)).amax() < 1e-12);
            let via_b = b.matrix() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w.clone()))
                * b.matrix().transpose();
            prop_assert!((via_b - &l).amax() < 1e-12);
        }
    }
}
