//! Undirected network topology.
//!
//! Every node is a member of its own neighborhood, so `degree(k)` counts
//! the node itself. Node indices `0..n` are a fixed total order; the
//! ascending order is the default serial update schedule.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default number of placement attempts for [`random_geometric_graph`].
pub const DEFAULT_RGG_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("invalid edge {{{0}, {1}}}: {2}")]
    InvalidEdge(usize, usize, &'static str),
    #[error("graph is not connected: node {0} unreachable from node 0")]
    NotConnected(usize),
    #[error("node index {index} out of range for {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("no connected placement found after {0} attempts")]
    ConnectivityRetriesExhausted(usize),
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Connected, undirected, unweighted graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    // neighborhoods[k] is sorted and contains k
    neighborhoods: Vec<Vec<usize>>,
    n_edges: usize,
}

/// Closed neighborhood of a node: the node plus its adjacent nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood<'g> {
    pub node: usize,
    pub members: &'g [usize],
}

impl Graph {
    /// Validates the edge list and checks connectivity.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n_nodes == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &(k, l) in edges {
            if k >= n_nodes || l >= n_nodes {
                return Err(GraphError::InvalidEdge(k, l, "index out of range"));
            }
            if k == l {
                return Err(GraphError::InvalidEdge(k, l, "self-loop"));
            }
            if !seen.insert((k.min(l), k.max(l))) {
                return Err(GraphError::InvalidEdge(k, l, "duplicate"));
            }
        }
        let graph = Self::from_edge_set(n_nodes, &seen);
        if let Some(unreached) = graph.first_unreachable() {
            return Err(GraphError::NotConnected(unreached));
        }
        Ok(graph)
    }

    fn from_edge_set(n_nodes: usize, edges: &BTreeSet<(usize, usize)>) -> Self {
        let mut neighborhoods: Vec<Vec<usize>> = (0..n_nodes).map(|k| vec![k]).collect();
        for &(k, l) in edges {
            neighborhoods[k].push(l);
            neighborhoods[l].push(k);
        }
        for members in &mut neighborhoods {
            members.sort_unstable();
        }
        Self {
            neighborhoods,
            n_edges: edges.len(),
        }
    }

    fn first_unreachable(&self) -> Option<usize> {
        let n = self.n_nodes();
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(k) = queue.pop_front() {
            for &l in &self.neighborhoods[k] {
                if !visited[l] {
                    visited[l] = true;
                    queue.push_back(l);
                }
            }
        }
        visited.iter().position(|v| !v)
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect();
        Self::new(n, &edges)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        Self::new(n, &edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    fn check_index(&self, k: usize) -> Result<(), GraphError> {
        if k < self.n_nodes() {
            Ok(())
        } else {
            Err(GraphError::IndexOutOfRange {
                index: k,
                n_nodes: self.n_nodes(),
            })
        }
    }

    pub fn neighborhood(&self, k: usize) -> Result<Neighborhood<'_>, GraphError> {
        self.check_index(k)?;
        Ok(Neighborhood {
            node: k,
            members: &self.neighborhoods[k],
        })
    }

    /// Size of the closed neighborhood, `1 + incident edges`.
    pub fn degree(&self, k: usize) -> Result<usize, GraphError> {
        self.check_index(k)?;
        Ok(self.neighborhoods[k].len())
    }

    /// Sorted closed neighborhood of `k`. Panics if `k` is out of range.
    pub(crate) fn members(&self, k: usize) -> &[usize] {
        &self.neighborhoods[k]
    }

    pub fn has_edge(&self, k: usize, l: usize) -> bool {
        k != l && k < self.n_nodes() && self.neighborhoods[k].binary_search(&l).is_ok()
    }

    /// Largest number of incident edges over all nodes (self excluded).
    pub fn max_edge_degree(&self) -> usize {
        self.neighborhoods.iter().map(|m| m.len() - 1).max().unwrap_or(0)
    }

    /// Edges as `(k, l)` with `k < l`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighborhoods
            .iter()
            .enumerate()
            .flat_map(|(k, m)| m.iter().filter(move |&&l| l > k).map(move |&l| (k, l)))
            .collect()
    }

    /// Serializes to the edge-list text format: the node count on the
    /// first line, then one `k l` pair per line.
    pub fn to_edge_list(&self) -> String {
        self.to_string()
    }

    /// Parses the edge-list text format. Blank lines and `#` comments are
    /// ignored; indices are 0-based.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n_nodes = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    reason: format!("expected a non-negative integer, got {s:?}"),
                })
            };
            match (n_nodes, fields.as_slice()) {
                (None, [n]) => n_nodes = Some(parse(n)?),
                (None, _) => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        reason: "first line must hold the node count".into(),
                    })
                }
                (Some(_), [k, l]) => edges.push((parse(k)?, parse(l)?)),
                (Some(_), _) => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        reason: format!("expected \"k l\", got {line:?}"),
                    })
                }
            }
        }
        let n_nodes = n_nodes.ok_or(GraphError::Parse {
            line: 0,
            reason: "missing node count".into(),
        })?;
        Self::new(n_nodes, &edges)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n_nodes())?;
        for (k, l) in self.edges() {
            writeln!(f, "{k} {l}")?;
        }
        Ok(())
    }
}

/// Random geometric graph in the unit square, retrying placement until
/// the result is connected (at most [`DEFAULT_RGG_RETRIES`] attempts).
pub fn random_geometric_graph(n_nodes: usize, radius: f64, seed: u64) -> Result<Graph, GraphError> {
    random_geometric_graph_with_retries(n_nodes, radius, seed, DEFAULT_RGG_RETRIES)
}

/// Like [`random_geometric_graph`] with an explicit attempt cap. Each
/// attempt takes fresh positions from the same seeded stream.
pub fn random_geometric_graph_with_retries(
    n_nodes: usize,
    radius: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<Graph, GraphError> {
    if n_nodes == 0 {
        return Err(GraphError::Empty);
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GraphError::InvalidRadius(radius));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = radius * radius;
    for _ in 0..max_attempts {
        let points: Vec<(f64, f64)> = (0..n_nodes).map(|_| (rng.gen(), rng.gen())).collect();
        let mut edges = BTreeSet::new();
        for k in 0..n_nodes {
            for l in k + 1..n_nodes {
                let dx = points[k].0 - points[l].0;
                let dy = points[k].1 - points[l].1;
                if dx * dx + dy * dy <= r2 {
                    edges.insert((k, l));
                }
            }
        }
        let graph = Graph::from_edge_set(n_nodes, &edges);
        if graph.first_unreachable().is_none() {
            return Ok(graph);
        }
    }
    Err(GraphError::ConnectivityRetriesExhausted(max_attempts))
}
