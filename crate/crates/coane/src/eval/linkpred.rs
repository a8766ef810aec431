//! Link-prediction evaluation: a seeded 70/10/20 edge split with
//! equal-count non-edge negatives, Hadamard pair features, a logistic
//! regression scorer, and AUC.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::encoder::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::logreg::{train_logreg, LogReg, LogRegConfig};
use crate::eval::metrics::auc;
use crate::eval::EvalReport;
use crate::graph::{AttributedGraph, NodeId};
use crate::rng::{stream, SALT_SPLIT};

/// Positive edges split 70/10/20 plus equal-count negatives per split;
/// negatives are true non-edges and disjoint across splits.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    pub train_pos: Vec<(NodeId, NodeId)>,
    pub valid_pos: Vec<(NodeId, NodeId)>,
    pub test_pos: Vec<(NodeId, NodeId)>,
    pub train_neg: Vec<(NodeId, NodeId)>,
    pub valid_neg: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
    pub seed: u64,
}

/// Split the graph's edges for link prediction. The training share is
/// floor(0.7 m), validation floor(0.1 m), test the remainder.
pub fn make_link_split(graph: &AttributedGraph, seed: u64) -> Result<LinkSplit> {
    let mut edges: Vec<(NodeId, NodeId)> = graph
        .undirected_edges()
        .into_iter()
        .map(|(u, v, _)| (u, v))
        .collect();
    let m = edges.len();
    if m < 10 {
        return Err(Error::Validation(format!(
            "link split needs at least 10 edges, graph has {m}"
        )));
    }
    use rand::seq::SliceRandom;
    let mut rng = stream(seed, SALT_SPLIT, &[0]);
    edges.shuffle(&mut rng);
    let n_train = (0.7 * m as f64).floor() as usize;
    let n_valid = (0.1 * m as f64).floor() as usize;
    let train_pos = edges[..n_train].to_vec();
    let valid_pos = edges[n_train..n_train + n_valid].to_vec();
    let test_pos = edges[n_train + n_valid..].to_vec();

    let n = graph.n();
    let max_pairs = n * (n - 1) / 2;
    if 2 * m > max_pairs {
        return Err(Error::Validation(
            "graph too dense to sample an equal number of non-edges".into(),
        ));
    }
    let mut taken: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut neg_rng = stream(seed, SALT_SPLIT, &[1]);
    let mut draw = |count: usize, taken: &mut HashSet<(NodeId, NodeId)>| {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = neg_rng.gen_range(0..n as NodeId);
            let v = neg_rng.gen_range(0..n as NodeId);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if graph.has_edge(key.0, key.1) || taken.contains(&key) {
                continue;
            }
            taken.insert(key);
            out.push(key);
        }
        out
    };
    let train_neg = draw(train_pos.len(), &mut taken);
    let valid_neg = draw(valid_pos.len(), &mut taken);
    let test_neg = draw(test_pos.len(), &mut taken);
    Ok(LinkSplit {
        train_pos,
        valid_pos,
        test_pos,
        train_neg,
        valid_neg,
        test_neg,
        seed,
    })
}

impl LinkSplit {
    /// The graph to train embeddings on: validation and test positives
    /// removed, everything else untouched.
    pub fn residual_graph(&self, graph: &AttributedGraph) -> AttributedGraph {
        let removed: Vec<(NodeId, NodeId)> = self
            .valid_pos
            .iter()
            .chain(&self.test_pos)
            .copied()
            .collect();
        graph.remove_edges(&removed)
    }

    fn part_lines(pairs: &[(NodeId, NodeId)], graph: &AttributedGraph) -> String {
        let mut out = String::new();
        for &(u, v) in pairs {
            writeln!(out, "{}\t{}", graph.node_name(u), graph.node_name(v)).unwrap();
        }
        out
    }

    /// Persist the six split parts as edge lists under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, graph: &AttributedGraph) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, part) in self.parts() {
            let path = dir.join(format!("{name}.tsv"));
            std::fs::write(&path, Self::part_lines(part, graph)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, graph: &AttributedGraph) -> Result<Self> {
        let dir = dir.as_ref();
        let read_part = |name: &str| -> Result<Vec<(NodeId, NodeId)>> {
            let path = dir.join(format!("{name}.tsv"));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(Error::parse(&path, lineno + 1, "expected `u v`"));
                }
                let u = graph.node_by_name(fields[0]).ok_or_else(|| {
                    Error::Validation(format!("unknown node `{}` in split", fields[0]))
                })?;
                let v = graph.node_by_name(fields[1]).ok_or_else(|| {
                    Error::Validation(format!("unknown node `{}` in split", fields[1]))
                })?;
                out.push((u, v));
            }
            Ok(out)
        };
        Ok(Self {
            train_pos: read_part("train_pos")?,
            valid_pos: read_part("valid_pos")?,
            test_pos: read_part("test_pos")?,
            train_neg: read_part("train_neg")?,
            valid_neg: read_part("valid_neg")?,
            test_neg: read_part("test_neg")?,
            seed: 0,
        })
    }

    pub fn parts(&self) -> [(&'static str, &Vec<(NodeId, NodeId)>); 6] {
        [
            ("train_pos", &self.train_pos),
            ("valid_pos", &self.valid_pos),
            ("test_pos", &self.test_pos),
            ("train_neg", &self.train_neg),
            ("valid_neg", &self.valid_neg),
            ("test_neg", &self.test_neg),
        ]
    }
}

fn hadamard(z: &EmbeddingMatrix, pairs: &[(NodeId, NodeId)]) -> Vec<f64> {
    let dim = z.dim;
    let mut out = Vec::with_capacity(pairs.len() * dim);
    for &(u, v) in pairs {
        let a = z.row(u);
        let b = z.row(v);
        out.extend(a.iter().zip(b).map(|(x, y)| x * y));
    }
    out
}

fn scores(model: &LogReg, feats: &[f64], dim: usize) -> Vec<f64> {
    feats.chunks(dim).map(|row| model.score(row)).collect()
}

/// Train a pair classifier on the train split and report AUC on validation
/// and test. Pair features are the elementwise product of the endpoints'
/// embeddings.
pub fn link_prediction_eval(
    z: &EmbeddingMatrix,
    split: &LinkSplit,
    cfg: &LogRegConfig,
) -> Result<EvalReport> {
    let needed = split
        .parts()
        .iter()
        .flat_map(|(_, p)| p.iter())
        .flat_map(|&(u, v)| [u, v])
        .max()
        .map(|m| m as usize + 1)
        .unwrap_or(0);
    if z.n() < needed {
        return Err(Error::Shape {
            expected: format!("embeddings for {needed} nodes"),
            got: format!("{} rows", z.n()),
        });
    }
    let dim = z.dim;
    let mut train_feats = hadamard(z, &split.train_pos);
    train_feats.extend(hadamard(z, &split.train_neg));
    let labels: Vec<f64> = std::iter::repeat(1.0)
        .take(split.train_pos.len())
        .chain(std::iter::repeat(0.0).take(split.train_neg.len()))
        .collect();
    let model = train_logreg(&train_feats, dim, &labels, cfg);

    let auc_of = |pos: &[(NodeId, NodeId)], neg: &[(NodeId, NodeId)]| -> Result<f64> {
        auc(
            &scores(&model, &hadamard(z, pos), dim),
            &scores(&model, &hadamard(z, neg), dim),
        )
    };
    let valid_auc = auc_of(&split.valid_pos, &split.valid_neg)?;
    let test_auc = auc_of(&split.test_pos, &split.test_neg)?;

    let mut report = EvalReport::new("link-prediction");
    report.metrics.insert("auc".into(), test_auc);
    report.metrics.insert("auc_valid".into(), valid_auc);
    report.params.insert("split_seed".into(), split.seed.to_string());
    report
        .params
        .insert("train_edges".into(), split.train_pos.len().to_string());
    report
        .params
        .insert("valid_edges".into(), split.valid_pos.len().to_string());
    report
        .params
        .insert("test_edges".into(), split.test_pos.len().to_string());
    report.params.insert("l2".into(), cfg.l2.to_string());
    report.params.insert("iters".into(), cfg.iters.to_string());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributedGraph;

    fn cycle_graph(n: usize) -> AttributedGraph {
        let names = (0..n).map(|i| i.to_string()).collect();
        let edges: Vec<(NodeId, NodeId, f64)> = (0..n)
            .map(|i| (i as NodeId, ((i + 1) % n) as NodeId, 1.0))
            .collect();
        AttributedGraph::from_parts(names, &edges, 0, vec![], None).unwrap()
    }

    #[test]
    fn ten_edge_graph_splits_7_1_2() {
        let g = cycle_graph(10);
        let split = make_link_split(&g, 4).unwrap();
        assert_eq!(split.train_pos.len(), 7);
        assert_eq!(split.valid_pos.len(), 1);
        assert_eq!(split.test_pos.len(), 2);
        assert_eq!(split.train_neg.len(), 7);
        assert_eq!(split.valid_neg.len(), 1);
        assert_eq!(split.test_neg.len(), 2);
    }

    #[test]
    fn small_graph_rejected() {
        let g = cycle_graph(5);
        assert!(make_link_split(&g, 1).is_err());
    }

    #[test]
    fn splits_disjoint_and_negatives_are_non_edges() {
        let g = cycle_graph(40);
        let split = make_link_split(&g, 9).unwrap();
        let mut seen = HashSet::new();
        for (_, part) in split.parts() {
            for &(u, v) in part {
                assert!(seen.insert((u.min(v), u.max(v))), "duplicate pair ({u},{v})");
            }
        }
        for part in [&split.train_neg, &split.valid_neg, &split.test_neg] {
            for &(u, v) in part {
                assert!(!g.has_edge(u, v));
                assert_ne!(u, v);
            }
        }
        // positives all come from the graph
        for part in [&split.train_pos, &split.valid_pos, &split.test_pos] {
            for &(u, v) in part {
                assert!(g.has_edge(u, v));
            }
        }
    }

    #[test]
    fn split_is_deterministic_and_residual_graph_shrinks() {
        let g = cycle_graph(30);
        let a = make_link_split(&g, 7).unwrap();
        let b = make_link_split(&g, 7).unwrap();
        assert_eq!(a, b);
        let residual = a.residual_graph(&g);
        assert_eq!(residual.edge_count(), a.train_pos.len());
        assert_eq!(residual.n(), g.n());
        for &(u, v) in &a.test_pos {
            assert!(!residual.has_edge(u, v));
        }
    }

    #[test]
    fn split_round_trips_through_files() {
        let g = cycle_graph(20);
        let split = make_link_split(&g, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        split.save(dir.path(), &g).unwrap();
        let loaded = LinkSplit::load(dir.path(), &g).unwrap();
        assert_eq!(loaded.train_pos, split.train_pos);
        assert_eq!(loaded.test_neg, split.test_neg);
    }

    #[test]
    fn separable_embeddings_reach_high_auc() {
        // hand-built embeddings where edges connect same-sign nodes
        let n = 24usize;
        let names = (0..n).map(|i| i.to_string()).collect();
        let mut edges = Vec::new();
        for i in 0..n / 2 {
            for j in (i + 1)..n / 2 {
                if (i + j) % 3 == 0 {
                    edges.push((i as NodeId, j as NodeId, 1.0));
                }
                let (a, b) = (i + n / 2, j + n / 2);
                if (i + j) % 3 == 1 {
                    edges.push((a as NodeId, b as NodeId, 1.0));
                }
            }
        }
        let g = AttributedGraph::from_parts(names, &edges, 0, vec![], None).unwrap();
        let mut z = EmbeddingMatrix::zeros(n, 4);
        let mut rng = crate::rng::stream(2, 0xC9, &[]);
        for v in 0..n {
            let sign = if v < n / 2 { 1.0 } else { -1.0 };
            let row = z.row_mut(v as NodeId);
            for x in row.iter_mut() {
                use rand::Rng as _;
                *x = sign * (1.0 + 0.1 * rng.gen::<f64>());
            }
        }
        let split = make_link_split(&g, 5).unwrap();
        let report = link_prediction_eval(&z, &split, &LogRegConfig::default()).unwrap();
        assert!(report.metric("auc").unwrap() > 0.9);
    }
}
