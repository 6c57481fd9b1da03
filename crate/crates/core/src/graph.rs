//! Undirected simple graphs, the generators used by the experiments, and the
//! adjacency / incidence views the bound matrices are built from.
//!
//! Edges are kept as `(i, j)` with `i < j`, sorted lexicographically. That
//! order is the undirected edge index. The directed index puts every `(i, j)`
//! with `i < j` first (in undirected order) and then every reversed pair
//! `(j, i)` in the same order, so `q_E = (q_out, q_in)` for a star with hub 0.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::{parse_field, SparseMatrix};
use crate::spectral::Stall;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, out-of-range
    /// endpoints, and repeated pairs (in either orientation).
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            canon.push((i.min(j), i.max(j)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {{{}, {}}}",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_canonical(n, canon))
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { n, edges, neighbors }
    }

    /// Rebuilds neighbor lists after deserialization.
    pub fn rebuilt(self) -> Result<Self> {
        Self::from_edges(self.n, self.edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn undirected_index(&self) -> UndirectedEdgeIndex<'_> {
        UndirectedEdgeIndex { edges: &self.edges }
    }

    pub fn directed_index(&self) -> DirectedEdgeIndex<'_> {
        DirectedEdgeIndex { edges: &self.edges }
    }

    pub fn adjacency_matrix(&self) -> SparseMatrix {
        let t = self
            .edges
            .iter()
            .flat_map(|&(i, j)| [(i, j, 1.0), (j, i, 1.0)])
            .collect();
        SparseMatrix::from_triplets(self.n, self.n, t).expect("edges are in range")
    }

    /// `B[i, e] = 1` iff node `i` is an endpoint of edge `e`.
    pub fn incidence_matrix(&self) -> SparseMatrix {
        let t = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(e, &(i, j))| [(i, e, 1.0), (j, e, 1.0)])
            .collect();
        SparseMatrix::from_triplets(self.n, self.edges.len(), t).expect("edges are in range")
    }

    /// `y = A x` without materializing `A`.
    pub fn adjacency_apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            *out = self.neighbors[i].iter().map(|&j| x[j]).sum();
        }
    }

    /// Largest adjacency eigenvalue; 0 for an edgeless graph.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max_with(1e-10, 200_000)
    }

    /// Shifted power iteration on `A + I` with a Rayleigh-quotient estimate,
    /// stopped once `||Ax - λx|| <= tol * |λ| * ||x||` or the residual settles
    /// at its rounding floor. Falls back to a dense
    /// symmetric eigensolver for small graphs that fail to converge.
    pub fn lambda_max_with(&self, tol: f64, max_iter: usize) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let n = self.n;
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut ax = vec![0.0; n];
        let mut lambda = 0.0;
        let mut stall = Stall::default();
        for _ in 0..max_iter {
            self.adjacency_apply(&x, &mut ax);
            lambda = dot(&x, &ax);
            let resid = x
                .iter()
                .zip(&ax)
                .map(|(xi, ai)| (ai - lambda * xi).powi(2))
                .sum::<f64>()
                .sqrt();
            if resid <= tol * lambda.abs() || stall.settled(resid, lambda.abs()) {
                return lambda;
            }
            // shift by one to break the ±λ symmetry of bipartite graphs
            for (xi, ai) in x.iter_mut().zip(&ax) {
                *xi += ai;
            }
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        if n <= 2048 {
            let a = self.adjacency_matrix().dense();
            let eig = nalgebra::SymmetricEigen::new(a);
            return eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        log::warn!("lambda_max: power iteration did not reach tolerance {tol}; returning Rayleigh estimate");
        lambda
    }

    /// Canonical edge-list text: `n m` then one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edges.len())?;
        for &(i, j) in &self.edges {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (n, m) = match lines.next() {
            Some((k, line)) => {
                let line = line?;
                let mut it = line.split_whitespace();
                (
                    parse_field::<usize>(it.next(), k + 1, "node count")?,
                    parse_field::<usize>(it.next(), k + 1, "edge count")?,
                )
            }
            None => return Err(Error::Parse { line: 1, msg: "empty edge list".into() }),
        };
        let mut edges = Vec::with_capacity(m);
        for (k, line) in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let i = parse_field::<usize>(it.next(), k + 1, "endpoint")?;
            let j = parse_field::<usize>(it.next(), k + 1, "endpoint")?;
            if it.next().is_some() {
                return Err(Error::Parse { line: k + 1, msg: "trailing fields".into() });
            }
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, edges)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Position of each undirected edge `{i, j}` in `0..|E|`.
#[derive(Debug, Clone, Copy)]
pub struct UndirectedEdgeIndex<'g> {
    edges: &'g [(usize, usize)],
}

impl UndirectedEdgeIndex<'_> {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }
}

/// Position of each ordered pair `(i, j)` in `0..2|E|`: `i < j` pairs occupy
/// `0..|E|`, reversed pairs `|E|..2|E|`.
#[derive(Debug, Clone, Copy)]
pub struct DirectedEdgeIndex<'g> {
    edges: &'g [(usize, usize)],
}

impl DirectedEdgeIndex<'_> {
    pub fn len(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let e = self.edges.binary_search(&(i.min(j), i.max(j))).ok()?;
        Some(if i < j { e } else { e + self.edges.len() })
    }

    pub fn pair(&self, k: usize) -> (usize, usize) {
        let m = self.edges.len();
        if k < m {
            self.edges[k]
        } else {
            let (i, j) = self.edges[k - m];
            (j, i)
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).map(|k| self.pair(k))
    }
}

// ---------------------------------------------------------------------------
// Generators

/// Hub 0 joined to `1..n`.
pub fn star(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("star needs n >= 2, got {n}")));
    }
    Ok(Graph::from_canonical(n, (1..n).map(|j| (0, j)).collect()))
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn clique(n: usize) -> Result<Graph> {
    if n < 1 {
        return Err(Error::InvalidSize("clique needs n >= 1".into()));
    }
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Ok(Graph::from_canonical(n, edges))
}

pub fn path(n: usize) -> Result<Graph> {
    if n < 1 {
        return Err(Error::InvalidSize("path needs n >= 1".into()));
    }
    Ok(Graph::from_canonical(n, (1..n).map(|j| (j - 1, j)).collect()))
}

/// Hub 0 joined to `arms` disjoint paths of `arm_length` nodes. Arm `a`
/// occupies nodes `1 + a*arm_length ..= (a+1)*arm_length`, hub side first.
pub fn spider(arms: usize, arm_length: usize) -> Result<Graph> {
    if arms < 1 || arm_length < 1 {
        return Err(Error::InvalidSize(format!(
            "spider needs arms >= 1 and arm_length >= 1, got ({arms}, {arm_length})"
        )));
    }
    let n = 1 + arms * arm_length;
    let mut edges = Vec::with_capacity(n - 1);
    for a in 0..arms {
        let first = 1 + a * arm_length;
        edges.push((0, first));
        for k in 1..arm_length {
            edges.push((first + k - 1, first + k));
        }
    }
    Graph::from_edges(n, edges)
}

/// G(n, p): pairs `(i, j)`, `i < j`, visited in lexicographic order, each kept
/// when a fresh uniform draw is `< p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.next_f64() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_canonical(n, edges))
}

/// Ring lattice with each node joined to its `k/2` successors, then one
/// rewiring pass: for offset `d = 1..=k/2` (outer) and node `u = 0..n`
/// (inner), with probability `p_rewire` the lattice edge `{u, u+d}` is moved
/// to `{u, w}` with `w` drawn uniformly until it is neither `u` nor a current
/// neighbour of `u`. Nodes already adjacent to everything are skipped.
pub fn watts_strogatz(n: usize, k: usize, p_rewire: f64, seed: u64) -> Result<Graph> {
    if !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("lattice degree k={k} must be even")));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("lattice degree k={k} must be < n={n}")));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(Error::InvalidParameter(format!("rewiring probability {p_rewire} outside [0, 1]")));
    }
    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    for u in 0..n {
        for d in 1..=k / 2 {
            let v = (u + d) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = SplitMix64::new(seed);
    for d in 1..=k / 2 {
        for u in 0..n {
            let v = (u + d) % n;
            if rng.next_f64() >= p_rewire {
                continue;
            }
            if adj[u].len() >= n - 1 || !adj[u].contains(&v) {
                continue;
            }
            let w = loop {
                let w = rng.below(n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, set)| set.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect();
    Ok(Graph::from_canonical(n, edges))
}
