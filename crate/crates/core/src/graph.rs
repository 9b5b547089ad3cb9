//! Immutable undirected graph in compressed sparse row form, plus the
//! whitespace edge-list loader.
//!
//! Node ids in input files are opaque tokens. They are compacted to
//! `0..n` in order of first appearance and the mapping is kept so that
//! results can be reported with the caller's ids.

use std::io::{BufRead, Write};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};

/// Compact node index.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<NodeId>,
    labels: Vec<String>,
    lookup: FxHashMap<String, NodeId>,
    num_edges: usize,
}

/// Summary statistics of a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub avg_degree: f64,
    pub max_degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Merge repeated edges (in either orientation). When false a repeated
    /// edge is a parse error.
    pub dedup: bool,
    /// Require every node token to be a non-negative integer.
    pub numeric_ids: bool,
    /// Treat the first non-comment line as an `n m` header.
    pub header: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            dedup: true,
            numeric_ids: false,
            header: false,
        }
    }
}

/// Counters for lines the loader dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub edge_lines: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Builds a graph over `n` nodes labelled `"0"..."n-1"`. Self-loops and
    /// repeated edges are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self::from_sorted_pairs(labels, &pairs))
    }

    fn from_sorted_pairs(labels: Vec<String>, pairs: &[(NodeId, NodeId)]) -> Graph {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for &(u, v) in pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![0; 2 * pairs.len()];
        for &(u, v) in pairs {
            adjacency[fill[u]] = v;
            fill[u] += 1;
            adjacency[fill[v]] = u;
            fill[v] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let lookup = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Graph {
            offsets,
            adjacency,
            labels,
            lookup,
            num_edges: pairs.len(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges.
    #[inline]
    pub fn m(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted, duplicate-free neighbours of `v`.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Sum of all degrees, `2m`.
    #[inline]
    pub fn volume(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// The raw id a node had in the input.
    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.lookup.get(label).copied()
    }

    /// Resolves a raw id and checks it can serve as a seed.
    pub fn seed_node(&self, label: &str) -> Result<NodeId> {
        let v = self
            .node(label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))?;
        self.check_seed(v)?;
        Ok(v)
    }

    pub(crate) fn check_seed(&self, v: NodeId) -> Result<()> {
        if v >= self.n() {
            return Err(Error::UnknownNode(v.to_string()));
        }
        if self.degree(v) == 0 {
            return Err(Error::IsolatedSeed(self.label(v).to_string()));
        }
        Ok(())
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.n();
        let m = self.m();
        GraphStats {
            n,
            m,
            avg_degree: if n == 0 { 0.0 } else { (2 * m) as f64 / n as f64 },
            max_degree: self.degrees().max().unwrap_or(0),
        }
    }

    pub fn avg_degree(&self) -> f64 {
        self.stats().avg_degree
    }

    /// Writes the graph as an edge list that [`load_edge_list`] reads back
    /// into an identical graph. Returns whether an `n m` header was written,
    /// in which case the file must be read with `LoadOptions::header` set.
    ///
    /// Lines are ordered so that nodes first appear in index order. A node
    /// that cannot be introduced by an edge (isolated, or whose neighbours
    /// all come later) is declared on a single-id line after the header.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<bool> {
        enum Line {
            Node(NodeId),
            Edge(NodeId, NodeId),
        }
        let n = self.n();
        let mut seen = vec![false; n];
        let mut lines = Vec::with_capacity(n);
        let mut needs_header = false;
        for v in 0..n {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let nbrs = self.neighbors(v);
            if let Some(&u) = nbrs.iter().find(|&&u| seen[u] && u != v) {
                lines.push(Line::Edge(u, v));
            } else if v + 1 < n && nbrs.binary_search(&(v + 1)).is_ok() {
                lines.push(Line::Edge(v, v + 1));
                seen[v + 1] = true;
            } else {
                lines.push(Line::Node(v));
                needs_header = true;
            }
        }
        if needs_header {
            writeln!(out, "{} {}", n, self.m())?;
        }
        let mut written: FxHashSet<(NodeId, NodeId)> = FxHashSet::default();
        for line in &lines {
            match *line {
                Line::Node(v) => writeln!(out, "{}", self.labels[v])?,
                Line::Edge(u, v) => {
                    written.insert((u.min(v), u.max(v)));
                    writeln!(out, "{} {}", self.labels[u], self.labels[v])?;
                }
            }
        }
        for u in 0..n {
            for &v in self.neighbors(u) {
                if u < v && !written.contains(&(u, v)) {
                    writeln!(out, "{} {}", self.labels[u], self.labels[v])?;
                }
            }
        }
        Ok(needs_header)
    }
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer in header, found `{tok}`"),
    })
}

/// Reads a whitespace-separated undirected edge list.
///
/// Lines starting with `#` or `%` are comments. Edges are symmetrised,
/// self-loops are dropped and counted, and repeated edges are merged (or
/// rejected when `opts.dedup` is false).
pub fn load_edge_list<R: BufRead>(reader: R, opts: LoadOptions) -> Result<(Graph, LoadReport)> {
    let mut labels: Vec<String> = Vec::new();
    let mut lookup: FxHashMap<String, NodeId> = FxHashMap::default();
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen_pairs: FxHashSet<(NodeId, NodeId)> = FxHashSet::default();
    let mut report = LoadReport::default();
    let mut header: Option<(usize, usize, usize)> = None;
    let mut expect_header = opts.header;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        // With a header, a lone id declares a node that may have no edges.
        if toks.len() == 1 && header.is_some() {
            if opts.numeric_ids && toks[0].parse::<u64>().is_err() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("node id `{}` is not a non-negative integer", toks[0]),
                });
            }
            if !lookup.contains_key(toks[0]) {
                lookup.insert(toks[0].to_string(), labels.len());
                labels.push(toks[0].to_string());
            }
            continue;
        }
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two node ids, found {} fields", toks.len()),
            });
        }
        if expect_header {
            expect_header = false;
            header = Some((
                parse_count(toks[0], lineno)?,
                parse_count(toks[1], lineno)?,
                lineno,
            ));
            continue;
        }
        if opts.numeric_ids {
            for tok in &toks {
                if tok.parse::<u64>().is_err() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("node id `{tok}` is not a non-negative integer"),
                    });
                }
            }
        }
        report.edge_lines += 1;
        if toks[0] == toks[1] {
            report.self_loops += 1;
            continue;
        }
        let mut intern = |tok: &str| -> NodeId {
            if let Some(&id) = lookup.get(tok) {
                id
            } else {
                let id = labels.len();
                labels.push(tok.to_string());
                lookup.insert(tok.to_string(), id);
                id
            }
        };
        let u = intern(toks[0]);
        let v = intern(toks[1]);
        let key = (u.min(v), u.max(v));
        if !seen_pairs.insert(key) {
            if !opts.dedup {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("repeated edge {} {}", toks[0], toks[1]),
                });
            }
            report.duplicates += 1;
            continue;
        }
        pairs.push(key);
    }

    if report.self_loops > 0 || report.duplicates > 0 {
        log::warn!(
            "dropped {} self-loop(s) and {} repeated edge(s)",
            report.self_loops,
            report.duplicates
        );
    }

    if let Some((n_decl, m_decl, lineno)) = header {
        if n_decl < labels.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "header declares {n_decl} nodes but {} distinct ids appear",
                    labels.len()
                ),
            });
        }
        if m_decl != pairs.len() && m_decl != report.edge_lines {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "header declares {m_decl} edges but {} distinct edges appear",
                    pairs.len()
                ),
            });
        }
        // Declared but unreferenced nodes get the smallest unused integer ids.
        let mut next = 0usize;
        while labels.len() < n_decl {
            while lookup.contains_key(&next.to_string()) {
                next += 1;
            }
            let label = next.to_string();
            lookup.insert(label.clone(), labels.len());
            labels.push(label);
        }
    }

    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    pairs.sort_unstable();
    Ok((Graph::from_sorted_pairs(labels, &pairs), report))
}

/// Loads an edge list from a file path with default options.
pub fn load_edge_list_file(path: &std::path::Path) -> Result<(Graph, LoadReport)> {
    let file = std::fs::File::open(path)?;
    load_edge_list(std::io::BufReader::new(file), LoadOptions::default())
}
