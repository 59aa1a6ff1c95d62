//! Immutable undirected graphs with sorted adjacency lists.
//!
//! Vertices are dense `0..n` indices. A self-loop appears once in its
//! vertex's neighbour list and contributes 1 to the degree, so a walk at `x`
//! stays put with probability `1/d(x)`. Only the complete-with-loops family
//! emits loops; it is stored implicitly because its adjacency is `n^2`.

mod generators;
mod io;

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generators::{
    new_complete_with_loops, new_odd_cycle, new_random_regular, new_ring_of_cliques,
    new_torus_grid, random_regular_with_stats, RegularStats,
};
pub use io::{load_edge_list, read_edge_list, save_edge_list, write_edge_list};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Topology {
    /// Every vertex adjacent to all `n` vertices, itself included.
    CompleteWithLoops,
    /// Compressed sparse rows; `targets[offsets[v]..offsets[v + 1]]` is sorted.
    Sparse { offsets: Vec<usize>, targets: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: usize,
    topology: Topology,
}

/// Neighbours of one vertex, in increasing order.
#[derive(Debug, Clone)]
pub enum Neighbors<'a> {
    All(std::ops::Range<usize>),
    List(std::slice::Iter<'a, u32>),
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::All(r) => r.next(),
            Neighbors::List(it) => it.next().map(|&u| u as usize),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            Neighbors::All(r) => r.size_hint(),
            Neighbors::List(it) => it.size_hint(),
        }
    }
}

impl ExactSizeIterator for Neighbors<'_> {}

impl Graph {
    pub(crate) fn complete_with_loops(n: usize) -> Self {
        Graph {
            n,
            m: n * (n + 1) / 2,
            topology: Topology::CompleteWithLoops,
        }
    }

    /// Build from an undirected edge list. Each edge appears once, in either
    /// orientation; `(v, v)` is a self-loop. Duplicates are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameters(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            adj[u].push(v as u32);
            if u != v {
                adj[v].push(u as u32);
            }
        }
        Self::from_sorted_lists(adj, edges.len())
    }

    fn from_sorted_lists(mut adj: Vec<Vec<u32>>, m: usize) -> Result<Self> {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let total: usize = adj.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameters(format!(
                    "duplicate edge ({v}, {})",
                    w[0]
                )));
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Graph {
            n,
            m,
            topology: Topology::Sparse { offsets, targets },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges; a self-loop counts once.
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        match &self.topology {
            Topology::CompleteWithLoops => self.n,
            Topology::Sparse { offsets, .. } => offsets[v + 1] - offsets[v],
        }
    }

    /// Sum of degrees. Equals `2m` when there are no loops.
    pub fn volume(&self) -> usize {
        match &self.topology {
            Topology::CompleteWithLoops => self.n * self.n,
            Topology::Sparse { targets, .. } => targets.len(),
        }
    }

    /// The `i`-th neighbour of `v` in sorted order.
    #[inline]
    pub fn neighbor(&self, v: usize, i: usize) -> usize {
        match &self.topology {
            Topology::CompleteWithLoops => i,
            Topology::Sparse { offsets, targets } => targets[offsets[v] + i] as usize,
        }
    }

    pub fn neighbors(&self, v: usize) -> Neighbors<'_> {
        match &self.topology {
            Topology::CompleteWithLoops => Neighbors::All(0..self.n),
            Topology::Sparse { offsets, targets } => {
                Neighbors::List(targets[offsets[v]..offsets[v + 1]].iter())
            }
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        match &self.topology {
            Topology::CompleteWithLoops => u < self.n && v < self.n,
            Topology::Sparse { offsets, targets } => targets[offsets[u]..offsets[u + 1]]
                .binary_search(&(v as u32))
                .is_ok(),
        }
    }

    /// True for the implicitly stored complete graph with loops, whose
    /// transition matrix is the uniform rank-one matrix.
    pub fn is_complete_with_loops(&self) -> bool {
        matches!(self.topology, Topology::CompleteWithLoops)
    }

    /// Each undirected edge once as `(u, v)` with `u <= v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&v| v >= u)
                .map(move |v| (u, v))
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub bipartite: bool,
    pub regular_degree: Option<usize>,
}

impl ValidationReport {
    /// Connected and not bipartite: the walk is ergodic and consensus is reachable.
    pub fn is_ergodic(&self) -> bool {
        self.connected && !self.bipartite
    }
}

/// Connectivity by breadth-first search, bipartiteness by 2-colouring every
/// component. A self-loop is an odd cycle.
pub fn validate(g: &Graph) -> ValidationReport {
    let n = g.n();
    let first = if n > 0 { Some(g.degree(0)) } else { None };
    let regular_degree = first.filter(|&d| (1..n).all(|v| g.degree(v) == d));

    if g.is_complete_with_loops() {
        return ValidationReport {
            connected: true,
            bipartite: false,
            regular_degree,
        };
    }

    let mut color: Vec<i8> = vec![-1; n];
    let mut components = 0;
    let mut bipartite = true;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if color[s] >= 0 {
            continue;
        }
        components += 1;
        color[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for v in g.neighbors(u) {
                if color[v] < 0 {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    bipartite = false;
                }
            }
        }
    }
    ValidationReport {
        connected: components <= 1,
        bipartite,
        regular_degree,
    }
}

/// Breadth-first order from `start`, restarting at the lowest unvisited
/// vertex whenever a component is exhausted.
pub fn bfs_order(g: &Graph, start: usize) -> Vec<usize> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let roots = std::iter::once(start).chain(0..n);
    for root in roots {
        if root >= n || seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    CompleteWithLoops,
    OddCycle,
    RandomRegular,
    TorusGrid,
    RingOfCliques,
    File,
}

impl GraphFamily {
    pub fn name(self) -> &'static str {
        match self {
            GraphFamily::CompleteWithLoops => "complete-with-loops",
            GraphFamily::OddCycle => "odd-cycle",
            GraphFamily::RandomRegular => "random-regular",
            GraphFamily::TorusGrid => "torus-grid",
            GraphFamily::RingOfCliques => "ring-of-cliques",
            GraphFamily::File => "file",
        }
    }
}

/// Recipe for a graph, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDescriptor {
    pub family: GraphFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliques: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clique_size: Option<usize>,
}

impl GraphDescriptor {
    pub fn new(family: GraphFamily) -> Self {
        GraphDescriptor {
            family,
            n: None,
            d: None,
            seed: None,
            path: None,
            cliques: None,
            clique_size: None,
        }
    }

    pub fn complete_with_loops(n: usize) -> Self {
        GraphDescriptor {
            n: Some(n),
            ..Self::new(GraphFamily::CompleteWithLoops)
        }
    }

    pub fn odd_cycle(n: usize) -> Self {
        GraphDescriptor {
            n: Some(n),
            ..Self::new(GraphFamily::OddCycle)
        }
    }

    pub fn random_regular(n: usize, d: usize, seed: u64) -> Self {
        GraphDescriptor {
            n: Some(n),
            d: Some(d),
            seed: Some(seed),
            ..Self::new(GraphFamily::RandomRegular)
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        GraphDescriptor {
            path: Some(path.into()),
            ..Self::new(GraphFamily::File)
        }
    }

    /// Same recipe at a different vertex count (used by size sweeps).
    pub fn with_n(&self, n: usize) -> Self {
        GraphDescriptor {
            n: Some(n),
            ..self.clone()
        }
    }

    fn require<T: Copy>(&self, value: Option<T>, key: &str) -> Result<T> {
        value.ok_or_else(|| {
            Error::InvalidParameters(format!("family {} requires `{key}`", self.family.name()))
        })
    }

    /// Check family constraints without building anything.
    pub fn check(&self) -> Result<()> {
        match self.family {
            GraphFamily::CompleteWithLoops => {
                if self.require(self.n, "n")? == 0 {
                    return Err(Error::InvalidParameters("n must be at least 1".into()));
                }
            }
            GraphFamily::OddCycle => {
                let n = self.require(self.n, "n")?;
                if n < 3 || n % 2 == 0 {
                    return Err(Error::InvalidParameters(format!(
                        "odd cycle needs odd n >= 3, got {n}"
                    )));
                }
            }
            GraphFamily::RandomRegular => {
                let n = self.require(self.n, "n")?;
                let d = self.require(self.d, "d")?;
                generators::check_regular_params(n, d)?;
                self.require(self.seed, "seed")?;
            }
            GraphFamily::TorusGrid => {
                let n = self.require(self.n, "n")?;
                generators::torus_side(n)?;
            }
            GraphFamily::RingOfCliques => {
                let c = self.require(self.cliques, "cliques")?;
                let s = self.require(self.clique_size, "clique_size")?;
                generators::check_ring_params(c, s)?;
            }
            GraphFamily::File => {
                if self.path.is_none() {
                    return Err(Error::InvalidParameters("family file requires `path`".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Graph> {
        self.check()?;
        match self.family {
            GraphFamily::CompleteWithLoops => new_complete_with_loops(self.n.unwrap()),
            GraphFamily::OddCycle => new_odd_cycle(self.n.unwrap()),
            GraphFamily::RandomRegular => {
                new_random_regular(self.n.unwrap(), self.d.unwrap(), self.seed.unwrap())
            }
            GraphFamily::TorusGrid => new_torus_grid(generators::torus_side(self.n.unwrap())?),
            GraphFamily::RingOfCliques => {
                new_ring_of_cliques(self.cliques.unwrap(), self.clique_size.unwrap())
            }
            GraphFamily::File => load_edge_list(self.path.as_ref().unwrap()),
        }
    }
}
