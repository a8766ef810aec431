//! Attributed graph storage and loaders.
//!
//! Graphs are undirected with strictly positive edge weights, stored
//! symmetrically as sorted adjacency lists. Node ids from input files are
//! remapped to dense indices in first-seen order; the original names are kept
//! for export. Attributes are an n×d row-major matrix of 64-bit reals.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Attribute file layout accepted by [`AttributedGraph::load_attributes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrFormat {
    /// Header line "n d", then n rows of d numbers (row i belongs to node i).
    Dense,
    /// Header line "n d", then lines "node_id attr_index value"; nodes with no
    /// line get an all-zero row.
    SparseTriplet,
}

#[derive(Debug, Clone)]
pub struct AttributedGraph {
    n: usize,
    d: usize,
    /// Sorted by neighbor id; symmetric; no self-loops; weights > 0.
    adj: Vec<Vec<(NodeId, f64)>>,
    /// n×d row-major.
    x: Vec<f64>,
    labels: Option<Vec<u32>>,
    label_names: Vec<String>,
    /// Dense index -> original id from the input file.
    names: Vec<String>,
}

impl AttributedGraph {
    /// Build a graph from parts, validating every invariant. Edges are given
    /// once per undirected pair and symmetrized internally.
    pub fn from_parts(
        names: Vec<String>,
        edges: &[(NodeId, NodeId, f64)],
        d: usize,
        x: Vec<f64>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        let n = names.len();
        if x.len() != n * d {
            return Err(Error::Shape {
                expected: format!("{}x{} attribute matrix", n, d),
                got: format!("{} values", x.len()),
            });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite attribute value {v}")));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Validation(format!(
                    "label vector has {} entries for {} nodes",
                    l.len(),
                    n
                )));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Validation(format!(
                    "edge ({u},{v}) references a node outside [0,{n})"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {u}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Validation(format!(
                    "edge ({u},{v}) has non-positive weight {w}"
                )));
            }
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }
        for row in &mut adj {
            row.sort_unstable_by_key(|&(j, _)| j);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::Validation("duplicate edge in edge set".into()));
            }
        }
        Ok(Self {
            n,
            d,
            adj,
            x,
            labels,
            label_names: Vec::new(),
            names,
        })
    }

    /// Load a graph from an edge-list file: one edge per line,
    /// "src dst [weight]" separated by tabs or spaces. A single-token line
    /// declares an isolated node. Repeated and reciprocal entries are merged
    /// keeping the maximum weight. Attributes start out empty (d = 0).
    pub fn load_edge_list(path: impl AsRef<Path>, weighted: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let mut intern = |id: &str, names: &mut Vec<String>| -> NodeId {
            *index.entry(id.to_string()).or_insert_with(|| {
                names.push(id.to_string());
                (names.len() - 1) as NodeId
            })
        };
        let mut weights: HashMap<(NodeId, NodeId), f64> = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.len() {
                0 => continue,
                1 => {
                    intern(fields[0], &mut names);
                }
                2 | 3 => {
                    if fields.len() == 3 && !weighted {
                        return Err(Error::parse(
                            path,
                            lineno,
                            "unexpected weight column in unweighted mode",
                        ));
                    }
                    let w = if fields.len() == 3 {
                        fields[2].parse::<f64>().map_err(|_| {
                            Error::parse(path, lineno, format!("bad weight `{}`", fields[2]))
                        })?
                    } else {
                        1.0
                    };
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(Error::Validation(format!(
                            "{}:{}: edge weight must be strictly positive, got {}",
                            path.display(),
                            lineno,
                            w
                        )));
                    }
                    if fields[0] == fields[1] {
                        return Err(Error::Validation(format!(
                            "{}:{}: self-loop on `{}`",
                            path.display(),
                            lineno,
                            fields[0]
                        )));
                    }
                    let u = intern(fields[0], &mut names);
                    let v = intern(fields[1], &mut names);
                    let key = (u.min(v), u.max(v));
                    let e = weights.entry(key).or_insert(w);
                    *e = e.max(w);
                }
                k => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("expected 1-3 fields, got {k}"),
                    ))
                }
            }
        }
        let mut edges: Vec<(NodeId, NodeId, f64)> =
            weights.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        Self::from_parts(names, &edges, 0, Vec::new(), None)
    }

    /// Populate the attribute matrix from a file. Returns warnings (e.g. nodes
    /// with no sparse entries that were zero-filled).
    pub fn load_attributes(
        &mut self,
        path: impl AsRef<Path>,
        format: AttrFormat,
    ) -> Result<Vec<String>> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty attribute file"))?;
        let header = header.map_err(|e| Error::io(path, e))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse(path, 1, "expected header line `n d`"));
        }
        let n: usize = dims[0]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad node count in header"))?;
        let d: usize = dims[1]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad attribute count in header"))?;
        if n != self.n {
            return Err(Error::Validation(format!(
                "attribute file declares {} nodes, graph has {}",
                n, self.n
            )));
        }
        let mut x = vec![0.0f64; n * d];
        let mut warnings = Vec::new();
        match format {
            AttrFormat::Dense => {
                let mut row = 0usize;
                for (lineno, line) in lines {
                    let lineno = lineno + 1;
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    if row >= n {
                        return Err(Error::parse(path, lineno, "more rows than declared"));
                    }
                    let mut col = 0usize;
                    for tok in line.split_whitespace() {
                        if col >= d {
                            return Err(Error::parse(
                                path,
                                lineno,
                                format!("row has more than {d} columns"),
                            ));
                        }
                        x[row * d + col] = tok.parse::<f64>().map_err(|_| {
                            Error::parse(path, lineno, format!("bad value `{tok}`"))
                        })?;
                        col += 1;
                    }
                    if col != d {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("expected {d} columns, got {col}"),
                        ));
                    }
                    row += 1;
                }
                if row != n {
                    return Err(Error::Validation(format!(
                        "dense attribute file has {row} rows, declared {n}"
                    )));
                }
            }
            AttrFormat::SparseTriplet => {
                let mut touched = vec![false; n];
                for (lineno, line) in lines {
                    let lineno = lineno + 1;
                    let line = line.map_err(|e| Error::io(path, e))?;
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.is_empty() {
                        continue;
                    }
                    if fields.len() != 3 {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("expected `node_id attr_index value`, got {} fields", fields.len()),
                        ));
                    }
                    let node = self.node_by_name(fields[0]).ok_or_else(|| {
                        Error::Validation(format!(
                            "{}:{}: unknown node id `{}`",
                            path.display(),
                            lineno,
                            fields[0]
                        ))
                    })?;
                    let col: usize = fields[1].parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad attribute index `{}`", fields[1]))
                    })?;
                    if col >= d {
                        return Err(Error::Validation(format!(
                            "{}:{}: attribute index {} out of range (d = {})",
                            path.display(),
                            lineno,
                            col,
                            d
                        )));
                    }
                    let val: f64 = fields[2].parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad value `{}`", fields[2]))
                    })?;
                    x[node as usize * d + col] = val;
                    touched[node as usize] = true;
                }
                let missing = touched.iter().filter(|t| !**t).count();
                if missing > 0 {
                    warnings.push(format!(
                        "{missing} node(s) had no attribute entries; rows zero-filled"
                    ));
                }
            }
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite attribute value {v}")));
        }
        self.d = d;
        self.x = x;
        Ok(warnings)
    }

    /// Load a citation-network dataset distributed as a content/cites file
    /// pair: content lines are "id attr_0 .. attr_{d-1} label", cites lines
    /// are "id id". Citation edges are treated as undirected; edges touching
    /// unknown ids and self-citations are dropped with a count warning.
    pub fn load_linqs(
        content_path: impl AsRef<Path>,
        cites_path: impl AsRef<Path>,
    ) -> Result<(Self, Vec<String>)> {
        let content_path = content_path.as_ref();
        let cites_path = cites_path.as_ref();
        let file = File::open(content_path).map_err(|e| Error::io(content_path, e))?;
        let mut names = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        let mut labels: Vec<u32> = Vec::new();
        let mut label_names: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, u32> = HashMap::new();
        let mut d: Option<usize> = None;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(content_path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 2 {
                return Err(Error::parse(
                    content_path,
                    lineno,
                    "expected `id attrs... label`",
                ));
            }
            let row_d = fields.len() - 2;
            match d {
                None => d = Some(row_d),
                Some(d0) if d0 != row_d => {
                    return Err(Error::Validation(format!(
                        "{}:{}: inconsistent attribute arity: {} vs {}",
                        content_path.display(),
                        lineno,
                        row_d,
                        d0
                    )))
                }
                _ => {}
            }
            names.push(fields[0].to_string());
            for tok in &fields[1..fields.len() - 1] {
                rows.push(tok.parse::<f64>().map_err(|_| {
                    Error::parse(content_path, lineno, format!("bad attribute `{tok}`"))
                })?);
            }
            let label = fields[fields.len() - 1];
            let next = label_index.len() as u32;
            let id = *label_index.entry(label.to_string()).or_insert_with(|| {
                label_names.push(label.to_string());
                next
            });
            labels.push(id);
        }
        let d = d.unwrap_or(0);
        let index: HashMap<&str, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as NodeId))
            .collect();

        let file = File::open(cites_path).map_err(|e| Error::io(cites_path, e))?;
        let mut weights: HashMap<(NodeId, NodeId), f64> = HashMap::new();
        let mut dropped_unknown = 0usize;
        let mut dropped_self = 0usize;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(cites_path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::parse(
                    cites_path,
                    lineno,
                    format!("expected `id id`, got {} fields", fields.len()),
                ));
            }
            match (index.get(fields[0]), index.get(fields[1])) {
                (Some(&u), Some(&v)) => {
                    if u == v {
                        dropped_self += 1;
                    } else {
                        weights.insert((u.min(v), u.max(v)), 1.0);
                    }
                }
                _ => dropped_unknown += 1,
            }
        }
        let mut warnings = Vec::new();
        if dropped_unknown > 0 {
            warnings.push(format!(
                "dropped {dropped_unknown} citation(s) referencing ids absent from the content file"
            ));
        }
        if dropped_self > 0 {
            warnings.push(format!("dropped {dropped_self} self-citation(s)"));
        }
        let mut edges: Vec<(NodeId, NodeId, f64)> =
            weights.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let mut graph = Self::from_parts(names, &edges, d, rows, Some(labels))?;
        graph.label_names = label_names;
        Ok((graph, warnings))
    }

    /// Transition probabilities out of `v`: weight-proportional over its
    /// neighbors, empty for an isolated node.
    pub fn transition_distribution(&self, v: NodeId) -> Vec<(NodeId, f64)> {
        let row = &self.adj[v as usize];
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        if total <= 0.0 {
            return Vec::new();
        }
        row.iter().map(|&(j, w)| (j, w / total)).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.len()).sum::<usize>() / 2
    }

    /// Undirected edge density 2m / (n(n-1)).
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u as usize]
            .binary_search_by_key(&v, |&(j, _)| j)
            .is_ok()
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.adj[u as usize]
            .binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|i| self.adj[u as usize][i].1)
    }

    /// All undirected edges as (u, v, w) with u < v, in sorted order.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, row) in self.adj.iter().enumerate() {
            for &(v, w) in row {
                if (u as NodeId) < v {
                    out.push((u as NodeId, v, w));
                }
            }
        }
        out
    }

    /// Attribute row of node `v`.
    pub fn attr_row(&self, v: NodeId) -> &[f64] {
        &self.x[v as usize * self.d..(v as usize + 1) * self.d]
    }

    pub fn attributes(&self) -> &[f64] {
        &self.x
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_classes(&self) -> usize {
        match &self.labels {
            Some(l) => l.iter().map(|&c| c as usize + 1).max().unwrap_or(0),
            None => 0,
        }
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.names[v as usize]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|s| s == name).map(|i| i as NodeId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Copy of this graph with the given undirected edges removed; nodes,
    /// attributes, and labels are untouched.
    pub fn remove_edges(&self, remove: &[(NodeId, NodeId)]) -> Self {
        let gone: std::collections::HashSet<(NodeId, NodeId)> = remove
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        let mut out = self.clone();
        for (u, row) in out.adj.iter_mut().enumerate() {
            row.retain(|&(v, _)| !gone.contains(&((u as NodeId).min(v), (u as NodeId).max(v))));
        }
        out
    }

    /// Replace the attribute matrix (used by ablations).
    pub fn with_attributes(&self, d: usize, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.n * d {
            return Err(Error::Shape {
                expected: format!("{}x{}", self.n, d),
                got: format!("{} values", x.len()),
            });
        }
        let mut out = self.clone();
        out.d = d;
        out.x = x;
        Ok(out)
    }

    pub fn set_labels(&mut self, labels: Vec<u32>, label_names: Vec<String>) -> Result<()> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "label vector has {} entries for {} nodes",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        self.label_names = label_names;
        Ok(())
    }

    /// Write the edge list: a bare name line per node first (so reload
    /// reproduces the node order and keeps isolated nodes), then one
    /// "src\tdst\tweight" line per undirected edge.
    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for name in &self.names {
            writeln!(out, "{}", name).unwrap();
        }
        for (u, v, w) in self.undirected_edges() {
            writeln!(out, "{}\t{}\t{}", self.names[u as usize], self.names[v as usize], w).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Write attributes in the dense format ("n d" header then n rows).
    pub fn save_attributes_dense(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{} {}", self.n, self.d).map_err(|e| Error::io(path, e))?;
        for v in 0..self.n {
            let row = self.attr_row(v as NodeId);
            let mut line = String::new();
            for (i, val) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{}", val).unwrap();
            }
            writeln!(w, "{}", line).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Write "node_id label" lines.
    pub fn save_labels(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Validation("graph has no labels".into()))?;
        let mut out = String::new();
        for v in 0..self.n {
            let class = labels[v] as usize;
            let name = self
                .label_names
                .get(class)
                .cloned()
                .unwrap_or_else(|| class.to_string());
            writeln!(out, "{}\t{}", self.names[v], name).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Read labels from "node_id label" lines; every node must be covered.
    pub fn load_labels(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut labels = vec![None; self.n];
        let mut label_names: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, u32> = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::parse(path, lineno, "expected `node_id label`"));
            }
            let node = self.node_by_name(fields[0]).ok_or_else(|| {
                Error::Validation(format!(
                    "{}:{}: unknown node id `{}`",
                    path.display(),
                    lineno,
                    fields[0]
                ))
            })?;
            let next = label_index.len() as u32;
            let id = *label_index.entry(fields[1].to_string()).or_insert_with(|| {
                label_names.push(fields[1].to_string());
                next
            });
            labels[node as usize] = Some(id);
        }
        let labels: Option<Vec<u32>> = labels.into_iter().collect();
        let labels =
            labels.ok_or_else(|| Error::Validation("label file does not cover every node".into()))?;
        self.labels = Some(labels);
        self.label_names = label_names;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    pub(crate) fn path_graph(k: usize) -> AttributedGraph {
        let names = (0..k).map(|i| i.to_string()).collect();
        let edges: Vec<(NodeId, NodeId, f64)> = (0..k.saturating_sub(1))
            .map(|i| (i as NodeId, (i + 1) as NodeId, 1.0))
            .collect();
        AttributedGraph::from_parts(names, &edges, 0, vec![], None).unwrap()
    }

    #[test]
    fn edge_list_minimal_path() {
        let f = write_tmp("a\tb\nb\tc\n");
        let g = AttributedGraph::load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edge_weight(0, 1), Some(1.0));
        assert_eq!(g.node_name(0), "a");
        assert!(g.has_edge(1, 2));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn edge_list_rejects_self_loop() {
        let f = write_tmp("a\ta\n");
        let err = AttributedGraph::load_edge_list(f.path(), false).unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
    }

    #[test]
    fn edge_list_rejects_negative_weight() {
        let f = write_tmp("a\tb\t-2.0\n");
        let err = AttributedGraph::load_edge_list(f.path(), true).unwrap_err();
        assert!(err.to_string().contains("strictly positive"), "{err}");
    }

    #[test]
    fn edge_list_parse_error_names_line() {
        let f = write_tmp("a b\nx y z w\n");
        let err = AttributedGraph::load_edge_list(f.path(), true).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn edge_list_symmetrizes_with_max_weight() {
        let f = write_tmp("a b 2.0\nb a 5.0\n");
        let g = AttributedGraph::load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_weight(0, 1), Some(5.0));
        assert_eq!(g.edge_weight(1, 0), Some(5.0));
    }

    #[test]
    fn transition_uniform_over_equal_weights() {
        let g = path_graph(3);
        let dist = g.transition_distribution(1);
        assert_eq!(dist, vec![(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn transition_proportional() {
        let names = vec!["x".into(), "a".into(), "b".into()];
        let g =
            AttributedGraph::from_parts(names, &[(0, 1, 1.0), (0, 2, 3.0)], 0, vec![], None)
                .unwrap();
        let dist = g.transition_distribution(0);
        assert_eq!(dist, vec![(1, 0.25), (2, 0.75)]);
    }

    #[test]
    fn transition_isolated_is_empty() {
        let g = AttributedGraph::from_parts(vec!["only".into()], &[], 0, vec![], None).unwrap();
        assert!(g.transition_distribution(0).is_empty());
    }

    #[test]
    fn dense_attributes_echo() {
        let mut g = path_graph(3);
        let f = write_tmp("3 2\n1 0\n0 1\n1 1\n");
        let warnings = g.load_attributes(f.path(), AttrFormat::Dense).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(g.d(), 2);
        assert_eq!(g.attr_row(0), &[1.0, 0.0]);
        assert_eq!(g.attr_row(2), &[1.0, 1.0]);
    }

    #[test]
    fn sparse_attributes_zero_fill_warns() {
        let mut g = path_graph(3);
        let f = write_tmp("3 2\n0 0 1.5\n1 1 2.5\n");
        let warnings = g.load_attributes(f.path(), AttrFormat::SparseTriplet).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("zero-filled"));
        assert_eq!(g.attr_row(2), &[0.0, 0.0]);
        assert_eq!(g.attr_row(0), &[1.5, 0.0]);
    }

    #[test]
    fn sparse_attributes_unknown_node_errs() {
        let mut g = path_graph(2);
        let f = write_tmp("2 2\nnope 0 1.0\n");
        let err = g.load_attributes(f.path(), AttrFormat::SparseTriplet).unwrap_err();
        assert!(err.to_string().contains("unknown node id"), "{err}");
    }

    #[test]
    fn sparse_attributes_column_out_of_range_errs() {
        let mut g = path_graph(2);
        let f = write_tmp("2 2\n0 2 1.0\n");
        let err = g.load_attributes(f.path(), AttrFormat::SparseTriplet).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn linqs_singleton() {
        let content = write_tmp("n0 1 0 1 classA\n");
        let cites = write_tmp("");
        let (g, warnings) = AttributedGraph::load_linqs(content.path(), cites.path()).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.d(), 3);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.labels(), Some(&[0u32][..]));
        assert!(warnings.is_empty());
    }

    #[test]
    fn linqs_inconsistent_arity_errs() {
        let content = write_tmp("n0 1 0 classA\nn1 1 classB\n");
        let cites = write_tmp("");
        let err = AttributedGraph::load_linqs(content.path(), cites.path()).unwrap_err();
        assert!(err.to_string().contains("inconsistent attribute arity"), "{err}");
    }

    #[test]
    fn linqs_drops_dangling_citations() {
        let content = write_tmp("n0 1 classA\nn1 0 classB\n");
        let cites = write_tmp("n0 n1\nn0 ghost\n");
        let (g, warnings) = AttributedGraph::load_linqs(content.path(), cites.path()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("dropped 1"));
    }

    #[test]
    fn round_trip_preserves_graph() {
        let mut g = path_graph(4);
        let attrs = write_tmp("4 2\n0.25 -1\n0 0.125e-3\n7 8\n1 1\n");
        g.load_attributes(attrs.path(), AttrFormat::Dense).unwrap();
        g.set_labels(vec![0, 1, 0, 1], vec!["x".into(), "y".into()]).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let ep = dir.path().join("edges.txt");
        let ap = dir.path().join("attrs.txt");
        let lp = dir.path().join("labels.txt");
        g.save_edge_list(&ep).unwrap();
        g.save_attributes_dense(&ap).unwrap();
        g.save_labels(&lp).unwrap();

        let mut h = AttributedGraph::load_edge_list(&ep, true).unwrap();
        h.load_attributes(&ap, AttrFormat::Dense).unwrap();
        h.load_labels(&lp).unwrap();

        assert_eq!(g.n(), h.n());
        assert_eq!(g.d(), h.d());
        assert_eq!(g.undirected_edges(), h.undirected_edges());
        assert_eq!(g.attributes(), h.attributes());
        for v in 0..g.n() as NodeId {
            let gl = g.labels().unwrap()[v as usize] as usize;
            let hl = h.labels().unwrap()[v as usize] as usize;
            assert_eq!(g.label_names()[gl], h.label_names()[hl]);
        }
    }

    #[test]
    fn round_trip_keeps_isolated_nodes() {
        let names = vec!["a".into(), "b".into(), "lone".into()];
        let g = AttributedGraph::from_parts(names, &[(0, 1, 1.0)], 0, vec![], None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ep = dir.path().join("edges.txt");
        g.save_edge_list(&ep).unwrap();
        let h = AttributedGraph::load_edge_list(&ep, true).unwrap();
        assert_eq!(h.n(), 3);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.node_name(2), "lone");
    }

    #[test]
    fn symmetry_holds_on_loaded_graphs() {
        let f = write_tmp("a b 2\nb c 3\nc a 4\nd c 1\n");
        let g = AttributedGraph::load_edge_list(f.path(), true).unwrap();
        for u in 0..g.n() as NodeId {
            for &(v, w) in g.neighbors(u) {
                assert_eq!(g.edge_weight(v, u), Some(w));
            }
        }
    }

    #[test]
    fn transition_sums_to_one() {
        let f = write_tmp("a b 2\nb c 3\nc a 4\nd c 1\ne\n");
        let g = AttributedGraph::load_edge_list(f.path(), true).unwrap();
        for v in 0..g.n() as NodeId {
            let dist = g.transition_distribution(v);
            if g.degree(v) == 0 {
                assert!(dist.is_empty());
                continue;
            }
            let total: f64 = dist.iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let wsum: f64 = g.neighbors(v).iter().map(|&(_, w)| w).sum();
            for (j, p) in dist {
                assert_eq!(p, g.edge_weight(v, j).unwrap() / wsum);
            }
        }
    }
}
