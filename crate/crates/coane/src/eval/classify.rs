//! Node label classification: stratified train/test split, one-vs-rest
//! logistic regression on embedding rows, macro and micro F1.

use rand::seq::SliceRandom;

use crate::encoder::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::logreg::{train_logreg, LogRegConfig};
use crate::eval::metrics::{macro_f1, micro_f1};
use crate::eval::EvalReport;
use crate::graph::NodeId;
use crate::rng::{stream, SALT_EVAL};

/// Per-class stratified split: floor(train_pct * class size) members of each
/// class go to the train side. A class can end up absent from the train side
/// when it is very small; the caller treats it as never-predicted.
pub fn stratified_split(
    labels: &[u32],
    train_pct: f64,
    seed: u64,
) -> (Vec<NodeId>, Vec<NodeId>) {
    let num_classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<NodeId>> = vec![Vec::new(); num_classes];
    for (v, &c) in labels.iter().enumerate() {
        by_class[c as usize].push(v as NodeId);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        let mut rng = stream(seed, SALT_EVAL, &[c as u64]);
        members.shuffle(&mut rng);
        let k = (train_pct * members.len() as f64).floor() as usize;
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn gather(z: &EmbeddingMatrix, nodes: &[NodeId]) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len() * z.dim);
    for &v in nodes {
        out.extend_from_slice(z.row(v));
    }
    out
}

/// One-vs-rest classification at the given training percentage.
pub fn classification_eval(
    z: &EmbeddingMatrix,
    labels: &[u32],
    train_pct: f64,
    seed: u64,
    cfg: &LogRegConfig,
) -> Result<EvalReport> {
    if labels.len() != z.n() {
        return Err(Error::Shape {
            expected: format!("{} labels", z.n()),
            got: format!("{}", labels.len()),
        });
    }
    if !(0.0..1.0).contains(&train_pct) || train_pct <= 0.0 {
        return Err(Error::Validation(format!(
            "train percentage must be in (0,1), got {train_pct}"
        )));
    }
    let num_classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let (train, test) = stratified_split(labels, train_pct, seed);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Validation(
            "stratified split produced an empty side".into(),
        ));
    }
    let train_feats = gather(z, &train);
    let test_feats = gather(z, &test);
    let mut absent_classes = Vec::new();
    // one binary model per class; prediction is the argmax score
    let mut scores = vec![f64::NEG_INFINITY; test.len() * num_classes];
    for class in 0..num_classes {
        let present = train.iter().any(|&v| labels[v as usize] == class as u32);
        if !present {
            absent_classes.push(class);
            continue; // never predicted
        }
        let y: Vec<f64> = train
            .iter()
            .map(|&v| if labels[v as usize] == class as u32 { 1.0 } else { 0.0 })
            .collect();
        let model = train_logreg(&train_feats, z.dim, &y, cfg);
        for (i, row) in test_feats.chunks(z.dim).enumerate() {
            scores[i * num_classes + class] = model.score(row);
        }
    }
    let y_pred: Vec<u32> = (0..test.len())
        .map(|i| {
            let row = &scores[i * num_classes..(i + 1) * num_classes];
            let mut best = 0usize;
            for (c, &s) in row.iter().enumerate() {
                if s > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect();
    let y_true: Vec<u32> = test.iter().map(|&v| labels[v as usize]).collect();

    let mut report = EvalReport::new("node-classification");
    report
        .metrics
        .insert("macro_f1".into(), macro_f1(&y_true, &y_pred, num_classes));
    report
        .metrics
        .insert("micro_f1".into(), micro_f1(&y_true, &y_pred, num_classes));
    report.params.insert("train_pct".into(), train_pct.to_string());
    report.params.insert("split_seed".into(), seed.to_string());
    report.params.insert("train_nodes".into(), train.len().to_string());
    report.params.insert("test_nodes".into(), test.len().to_string());
    report.params.insert("classes".into(), num_classes.to_string());
    if !absent_classes.is_empty() {
        report.params.insert(
            "warning_absent_classes".into(),
            format!("{absent_classes:?}"),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn clustered_embeddings(n_per: usize, classes: usize, dim: usize, seed: u64) -> (EmbeddingMatrix, Vec<u32>) {
        let n = n_per * classes;
        let mut z = EmbeddingMatrix::zeros(n, dim);
        let mut labels = Vec::with_capacity(n);
        let mut rng = stream(seed, 0xCC, &[]);
        for v in 0..n {
            let c = v / n_per;
            labels.push(c as u32);
            let row = z.row_mut(v as NodeId);
            for (j, x) in row.iter_mut().enumerate() {
                let center = if j % classes == c { 2.0 } else { -0.5 };
                *x = center + rng.gen_range(-0.3..0.3);
            }
        }
        (z, labels)
    }

    #[test]
    fn single_class_scores_one() {
        let (z, _) = clustered_embeddings(20, 1, 4, 1);
        let labels = vec![0u32; 20];
        let report =
            classification_eval(&z, &labels, 0.5, 3, &LogRegConfig::default()).unwrap();
        assert_eq!(report.metric("macro_f1").unwrap(), 1.0);
        assert_eq!(report.metric("micro_f1").unwrap(), 1.0);
    }

    #[test]
    fn separable_classes_score_high() {
        let (z, labels) = clustered_embeddings(30, 3, 6, 2);
        let report =
            classification_eval(&z, &labels, 0.5, 5, &LogRegConfig::default()).unwrap();
        assert!(report.metric("macro_f1").unwrap() > 0.9);
        assert!(report.metric("micro_f1").unwrap() > 0.9);
    }

    #[test]
    fn stratified_split_respects_percentages() {
        let labels: Vec<u32> = (0..100).map(|i| (i % 4) as u32).collect();
        let (train, test) = stratified_split(&labels, 0.2, 7);
        assert_eq!(train.len(), 20);
        assert_eq!(test.len(), 80);
        for c in 0..4u32 {
            let k = train.iter().filter(|&&v| labels[v as usize] == c).count();
            assert_eq!(k, 5);
        }
    }

    #[test]
    fn tiny_class_can_be_absent_with_warning() {
        // class 1 has 2 members; at 20% it gets floor(0.4) = 0 train members
        let mut labels = vec![0u32; 42];
        labels[0] = 1;
        labels[1] = 1;
        let (z, _) = clustered_embeddings(21, 2, 4, 3);
        let report = classification_eval(&z, &labels, 0.2, 11, &LogRegConfig::default()).unwrap();
        assert!(report.params.contains_key("warning_absent_classes"));
    }

    #[test]
    fn split_is_deterministic() {
        let labels: Vec<u32> = (0..60).map(|i| (i % 3) as u32).collect();
        assert_eq!(
            stratified_split(&labels, 0.3, 9),
            stratified_split(&labels, 0.3, 9)
        );
    }
}
