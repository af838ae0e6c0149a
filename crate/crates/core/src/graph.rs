//! Undirected graphs with optional self-loops, and the Boolean presence mask
//! that tells the coin operators which grid states may interact.
//!
//! Node indices are 1-based everywhere in this API. A walk on a general
//! graph is obtained from the complete graph (every pair plus every
//! self-loop) by removing edges; removing `(j, k)` isolates the two grid
//! states `|j,k>` and `|k,j>`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    // normalized so that the first index is the smaller one
    edges: BTreeSet<(usize, usize)>,
}

fn ordered(j: usize, k: usize) -> (usize, usize) {
    if j <= k {
        (j, k)
    } else {
        (k, j)
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        Ok(Self {
            n,
            edges: BTreeSet::new(),
        })
    }

    /// Complete graph on `n` nodes, including all `n` self-loops.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for j in 1..=n {
            for k in j..=n {
                g.edges.insert((j, k));
            }
        }
        Ok(g)
    }

    /// Cycle `1 - 2 - ... - n - 1` without self-loops. Needs `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "a cycle needs at least 3 nodes, got {n}"
            )));
        }
        let mut g = Self::empty(n)?;
        for j in 1..n {
            g.edges.insert((j, j + 1));
        }
        g.edges.insert((1, n));
        Ok(g)
    }

    /// Path `1 - 2 - ... - n` without self-loops.
    pub fn path(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for j in 1..n {
            g.edges.insert((j, j + 1));
        }
        Ok(g)
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n)?;
        for (j, k) in edges {
            g.check_node(j)?;
            g.check_node(k)?;
            g.edges.insert(ordered(j, k));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as unordered pairs `(j, k)` with `j <= k`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.edges.contains(&ordered(j, k))
    }

    /// Number of coin states of node `j` that take part in the walk
    /// (a self-loop counts once).
    pub fn degree(&self, j: usize) -> usize {
        (1..=self.n).filter(|&k| self.has_edge(j, k)).count()
    }

    /// A copy of the graph without edge `(j, k)`. Both orientations go at once.
    pub fn remove_edge(&self, j: usize, k: usize) -> Result<Self> {
        let key = ordered(j, k);
        if !self.edges.contains(&key) {
            return Err(Error::EdgeNotFound(j, k));
        }
        let mut g = self.clone();
        g.edges.remove(&key);
        Ok(g)
    }

    /// A copy of the graph with edge `(j, k)` added (no-op if present).
    pub fn add_edge(&self, j: usize, k: usize) -> Result<Self> {
        self.check_node(j)?;
        self.check_node(k)?;
        let mut g = self.clone();
        g.edges.insert(ordered(j, k));
        Ok(g)
    }

    pub fn edge_mask(&self) -> EdgeMask {
        let n = self.n;
        let mut present = vec![false; n * n];
        for &(j, k) in &self.edges {
            present[(j - 1) * n + (k - 1)] = true;
            present[(k - 1) * n + (j - 1)] = true;
        }
        EdgeMask { n, present }
    }

    fn check_node(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n {
            Err(Error::InvalidArgument(format!(
                "node index {j} outside 1..={}",
                self.n
            )))
        } else {
            Ok(())
        }
    }
}

/// Symmetric `n x n` table of which grid states `|j,k>` belong to the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMask {
    n: usize,
    present: Vec<bool>,
}

impl EdgeMask {
    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based lookup.
    pub fn get(&self, j: usize, k: usize) -> bool {
        assert!(
            (1..=self.n).contains(&j) && (1..=self.n).contains(&k),
            "mask index ({j}, {k}) out of range"
        );
        self.present[(j - 1) * self.n + (k - 1)]
    }

    /// Row `j` (1-based) as a Boolean vector indexed by coin state.
    pub fn row(&self, j: usize) -> Vec<bool> {
        (1..=self.n).map(|k| self.get(j, k)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (1..=self.n).all(|j| (1..=self.n).all(|k| self.get(j, k) == self.get(k, j)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDocument {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    directed: bool,
}

/// Parse a graph from either the edge-list text format
///
/// ```text
/// 3        # node count
/// 1 2      # one undirected edge per line
/// 2 3
/// ```
///
/// or a JSON object `{"n": 3, "edges": [[1, 2], [2, 3]]}`. Duplicate edges
/// collapse; `#` starts a comment in the text format.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if doc.directed {
            return Err(Error::Parse {
                line: 1,
                message: "directed graphs are not supported".into(),
            });
        }
        if doc.n == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "node count must be positive".into(),
            });
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for [j, k] in doc.edges {
            if j == 0 || k == 0 || j > doc.n || k > doc.n {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("edge ({j}, {k}) has an index outside 1..={}", doc.n),
                });
            }
            edges.push((j, k));
        }
        return Graph::from_edges(doc.n, edges);
    }

    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if line.contains("->") {
            return Err(parse_err("directed edges are not supported".into()));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match n {
            None => {
                if fields.len() != 1 {
                    return Err(parse_err(format!("expected node count, found `{line}`")));
                }
                let count: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(format!("invalid node count `{}`", fields[0])))?;
                if count == 0 {
                    return Err(parse_err("node count must be positive".into()));
                }
                n = Some(count);
            }
            Some(count) => {
                if fields.len() != 2 {
                    return Err(parse_err(format!("expected `j k`, found `{line}`")));
                }
                let mut ends = [0usize; 2];
                for (slot, field) in ends.iter_mut().zip(&fields) {
                    *slot = field
                        .parse()
                        .map_err(|_| parse_err(format!("invalid node index `{field}`")))?;
                    if *slot == 0 || *slot > count {
                        return Err(parse_err(format!(
                            "node index {} outside 1..={count}",
                            *slot
                        )));
                    }
                }
                edges.push((ends[0], ends[1]));
            }
        }
    }
    let n = n.ok_or(Error::Parse {
        line: 1,
        message: "missing node count".into(),
    })?;
    Graph::from_edges(n, edges)
}

impl fmt::Display for Graph {
    /// Writes the edge-list text format understood by [`parse_graph`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for (j, k) in self.edges() {
            writeln!(f, "{j} {k}")?;
        }
        Ok(())
    }
}
