//! Metric primitives: AUC by the rank statistic, macro/micro F1, and
//! normalized mutual information.

use crate::error::{Error, Result};

/// Area under the ROC curve by the Mann-Whitney rank statistic; tied scores
/// count half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Validation(
            "AUC needs at least one positive and one negative score".into(),
        ));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // average ranks over tie groups (1-based ranks)
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Per-class confusion counts for single-label multi-class predictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Confusion {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
    pub total: usize,
    pub correct: usize,
}

pub fn confusion(y_true: &[u32], y_pred: &[u32], num_classes: usize) -> Confusion {
    assert_eq!(y_true.len(), y_pred.len());
    let mut c = Confusion {
        tp: vec![0; num_classes],
        fp: vec![0; num_classes],
        fn_: vec![0; num_classes],
        total: y_true.len(),
        correct: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            c.tp[t as usize] += 1;
            c.correct += 1;
        } else {
            c.fn_[t as usize] += 1;
            c.fp[p as usize] += 1;
        }
    }
    c
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Macro F1: unweighted mean of per-class F1 over all `num_classes` classes.
pub fn macro_f1(y_true: &[u32], y_pred: &[u32], num_classes: usize) -> f64 {
    let c = confusion(y_true, y_pred, num_classes);
    let sum: f64 = (0..num_classes)
        .map(|k| f1_from_counts(c.tp[k], c.fp[k], c.fn_[k]))
        .sum();
    sum / num_classes as f64
}

/// Micro F1: F1 of the pooled counts. For single-label predictions this
/// equals accuracy.
pub fn micro_f1(y_true: &[u32], y_pred: &[u32], num_classes: usize) -> f64 {
    let c = confusion(y_true, y_pred, num_classes);
    let tp: usize = c.tp.iter().sum();
    let fp: usize = c.fp.iter().sum();
    let fn_: usize = c.fn_.iter().sum();
    f1_from_counts(tp, fp, fn_)
}

/// Normalization convention for NMI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNorm {
    /// I / ((H(a) + H(b)) / 2)
    #[default]
    Arithmetic,
    /// I / sqrt(H(a) H(b))
    Geometric,
    /// I / min(H(a), H(b))
    Min,
    /// I / max(H(a), H(b))
    Max,
}

impl std::str::FromStr for NmiNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(NmiNorm::Arithmetic),
            "geometric" => Ok(NmiNorm::Geometric),
            "min" => Ok(NmiNorm::Min),
            "max" => Ok(NmiNorm::Max),
            other => Err(Error::Config(format!(
                "nmi norm must be arithmetic|geometric|min|max, got `{other}`"
            ))),
        }
    }
}

/// Normalized mutual information between two labelings. Two identical
/// trivial (single-cluster) labelings score 1.
pub fn nmi(a: &[u32], b: &[u32], norm: NmiNorm) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let ka = *a.iter().max().unwrap() as usize + 1;
    let kb = *b.iter().max().unwrap() as usize + 1;
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * kb + y as usize] += 1;
        ca[x as usize] += 1;
        cb[y as usize] += 1;
    }
    let nf = n as f64;
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&ca);
    let hb = entropy(&cb);
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / nf;
            let px = ca[x] as f64 / nf;
            let py = cb[y] as f64 / nf;
            mi += pxy * (pxy / (px * py)).ln();
        }
    }
    let denom = match norm {
        NmiNorm::Arithmetic => (ha + hb) / 2.0,
        NmiNorm::Geometric => (ha * hb).sqrt(),
        NmiNorm::Min => ha.min(hb),
        NmiNorm::Max => ha.max(hb),
    };
    if denom <= 0.0 {
        // both labelings trivial: identical iff mi == 0 as well
        return if ha == 0.0 && hb == 0.0 { 1.0 } else { 0.0 };
    }
    (mi / denom).clamp(0.0, 1.0)
}
