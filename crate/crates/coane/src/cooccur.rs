//! Co-occurrence statistics and contextual negative sampling.
//!
//! D counts how often node j appears in windows centered on node i (PAD and
//! the midst slot excluded, diagonal excluded). D1 restricts D to pairs
//! joined by an edge. The positive-loss targets come from a combination of
//! the row-normalized D and D1; negatives are drawn from the contextual
//! noise distribution P_V(v) = |context(v)| / sum |context(u)|.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NodeId};
use crate::rng::{stream, SALT_NEG_POOL};
use crate::sampler::ContextCorpus;

/// How the positive-loss target matrix is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMatrix {
    /// Row-normalized D plus D1 (default).
    #[default]
    NormPlusFirstHop,
    /// Row normalization applied to (D + D1).
    NormOfSum,
    /// Row-normalized D alone.
    NormOnly,
    /// D1 alone.
    FirstHopOnly,
}

impl std::str::FromStr for TargetMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dn_plus_d1" => Ok(TargetMatrix::NormPlusFirstHop),
            "norm_sum" => Ok(TargetMatrix::NormOfSum),
            "dn" => Ok(TargetMatrix::NormOnly),
            "d1" => Ok(TargetMatrix::FirstHopOnly),
            other => Err(Error::Config(format!(
                "target matrix must be one of dn_plus_d1|norm_sum|dn|d1, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for TargetMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetMatrix::NormPlusFirstHop => "dn_plus_d1",
            TargetMatrix::NormOfSum => "norm_sum",
            TargetMatrix::NormOnly => "dn",
            TargetMatrix::FirstHopOnly => "d1",
        })
    }
}

/// Sparse row-major matrix; rows sorted by column id.
pub type SparseRows = Vec<Vec<(NodeId, f64)>>;

fn row_get(row: &[(NodeId, f64)], j: NodeId) -> f64 {
    row.binary_search_by_key(&j, |&(c, _)| c)
        .map(|i| row[i].1)
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Pre,
    Batch,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(SamplingMode::Pre),
            "batch" => Ok(SamplingMode::Batch),
            other => Err(Error::Config(format!(
                "sampling mode must be `pre` or `batch`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplingMode::Pre => "pre",
            SamplingMode::Batch => "batch",
        })
    }
}

/// Offline candidate list for pre-sampling, drawn i.i.d. from the contextual
/// noise distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativePool {
    pub candidates: Vec<NodeId>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStats {
    /// Co-occurrence counts, midst and PAD slots excluded, no diagonal.
    pub d: SparseRows,
    /// D restricted to pairs with an edge.
    pub d1: SparseRows,
    /// Row-normalized D (each nonzero row sums to 1).
    pub dn: SparseRows,
    /// Positive-loss target matrix per the configured variant.
    pub dtilde: SparseRows,
    pub variant: TargetMatrix,
    /// max_v |context(v)|.
    pub k_p: usize,
    /// |context(v)| per node.
    pub context_counts: Vec<usize>,
    /// Contextual noise distribution P_V, sums to 1.
    pub noise: Vec<f64>,
    noise_cum: Vec<f64>,
    pub pool: Option<NegativePool>,
}

fn normalize_rows(m: &SparseRows) -> SparseRows {
    m.iter()
        .map(|row| {
            let total: f64 = row.iter().map(|&(_, v)| v).sum();
            if total <= 0.0 {
                return row.clone();
            }
            row.iter().map(|&(j, v)| (j, v / total)).collect()
        })
        .collect()
}

fn add_rows(a: &SparseRows, b: &SparseRows) -> SparseRows {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| {
            let mut out: Vec<(NodeId, f64)> = Vec::with_capacity(ra.len());
            let (mut i, mut j) = (0, 0);
            while i < ra.len() || j < rb.len() {
                match (ra.get(i), rb.get(j)) {
                    (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                        out.push((ca, va + vb));
                        i += 1;
                        j += 1;
                    }
                    (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                        out.push((ca, va));
                        i += 1;
                    }
                    (Some(_), Some(&(cb, vb))) => {
                        out.push((cb, vb));
                        j += 1;
                    }
                    (Some(&(ca, va)), None) => {
                        out.push((ca, va));
                        i += 1;
                    }
                    (None, Some(&(cb, vb))) => {
                        out.push((cb, vb));
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
            out
        })
        .collect()
}

/// Count co-occurrences over the corpus and assemble every derived matrix.
pub fn build_cooccurrence(
    corpus: &ContextCorpus,
    graph: &AttributedGraph,
    variant: TargetMatrix,
) -> CooccurrenceStats {
    let n = corpus.n();
    let half = (corpus.context_size - 1) / 2;
    let mut maps: Vec<std::collections::HashMap<NodeId, f64>> =
        vec![std::collections::HashMap::new(); n];
    for windows in &corpus.windows {
        for w in windows {
            let i = w.midst;
            for (s, slot) in w.slots.iter().enumerate() {
                if s == half {
                    continue;
                }
                let Some(j) = *slot else { continue };
                if j == i {
                    continue;
                }
                *maps[i as usize].entry(j).or_insert(0.0) += 1.0;
            }
        }
    }
    let d: SparseRows = maps
        .into_iter()
        .map(|m| {
            let mut row: Vec<(NodeId, f64)> = m.into_iter().collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            row
        })
        .collect();
    let d1: SparseRows = d
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .filter(|&&(j, _)| graph.has_edge(i as NodeId, j))
                .copied()
                .collect()
        })
        .collect();
    let dn = normalize_rows(&d);
    let dtilde = match variant {
        TargetMatrix::NormPlusFirstHop => add_rows(&dn, &d1),
        TargetMatrix::NormOfSum => normalize_rows(&add_rows(&d, &d1)),
        TargetMatrix::NormOnly => dn.clone(),
        TargetMatrix::FirstHopOnly => d1.clone(),
    };
    let context_counts = corpus.counts.clone();
    let k_p = context_counts.iter().copied().max().unwrap_or(0);
    let total: usize = context_counts.iter().sum();
    let noise: Vec<f64> = if total == 0 {
        vec![0.0; n]
    } else {
        context_counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    };
    let mut acc = 0.0;
    let noise_cum: Vec<f64> = noise
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect();
    CooccurrenceStats {
        d,
        d1,
        dn,
        dtilde,
        variant,
        k_p,
        context_counts,
        noise,
        noise_cum,
        pool: None,
    }
}

impl CooccurrenceStats {
    pub fn n(&self) -> usize {
        self.noise.len()
    }

    /// Whether j occurred in any window with midst i (the set used to filter
    /// negative candidates).
    pub fn in_context(&self, i: NodeId, j: NodeId) -> bool {
        row_get(&self.d[i as usize], j) > 0.0
    }

    fn sample_noise(&self, rng: &mut ChaCha20Rng) -> NodeId {
        let total = *self.noise_cum.last().unwrap_or(&0.0);
        let r: f64 = rng.gen_range(0.0..total);
        self.noise_cum.partition_point(|&c| c <= r).min(self.n() - 1) as NodeId
    }

    /// Build the offline pre-sampling pool: `pool_factor * k * n` i.i.d.
    /// draws from the noise distribution on stream (seed, SALT_NEG_POOL).
    pub fn build_pool(&mut self, k: usize, seed: u64, pool_factor: usize) {
        let mut rng = stream(seed, SALT_NEG_POOL, &[]);
        let size = pool_factor * k * self.n();
        let candidates = (0..size).map(|_| self.sample_noise(&mut rng)).collect();
        self.pool = Some(NegativePool { candidates, k });
    }

    /// Debug dump: "k_p <v>" header then "i j D_ij D1_ij" for every nonzero
    /// D entry in row order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "k_p\t{}", self.k_p).unwrap();
        for (i, row) in self.d.iter().enumerate() {
            for &(j, v) in row {
                writeln!(out, "{}\t{}\t{}\t{}", i, j, v, row_get(&self.d1[i], j)).unwrap();
            }
        }
        out
    }
}

/// The at-most-k_p strongest positive neighbors of node i, scored by the
/// target matrix, descending, ties broken by ascending node index.
pub fn top_kp_neighbors(stats: &CooccurrenceStats, i: NodeId) -> Vec<(NodeId, f64)> {
    let mut row: Vec<(NodeId, f64)> = stats.dtilde[i as usize]
        .iter()
        .filter(|&&(j, v)| v > 0.0 && j != i)
        .copied()
        .collect();
    row.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    row.truncate(stats.k_p);
    row
}

/// Draw up to k negatives for `target`. Pre mode scans the offline pool from
/// the start and takes the first k distinct valid nodes (not the target, not
/// in its context), topping up from `rng` if the pool runs dry. Batch mode
/// samples from the noise distribution restricted to `batch`. Returns the
/// drawn list and a flag that is true when fewer than k could be found.
pub fn draw_negatives(
    stats: &CooccurrenceStats,
    target: NodeId,
    k: usize,
    mode: SamplingMode,
    batch: &[NodeId],
    rng: &mut ChaCha20Rng,
) -> Result<(Vec<NodeId>, bool)> {
    if k == 0 {
        return Err(Error::Validation("negative sample count must be >= 1".into()));
    }
    if k > stats.n().saturating_sub(1) {
        return Err(Error::Validation(format!(
            "cannot draw {} negatives from a graph with {} nodes",
            k,
            stats.n()
        )));
    }
    let valid = |j: NodeId, out: &[NodeId]| -> bool {
        j != target && !stats.in_context(target, j) && !out.contains(&j)
    };
    let mut out = Vec::with_capacity(k);
    match mode {
        SamplingMode::Pre => {
            let pool = stats.pool.as_ref().ok_or_else(|| {
                Error::Validation("pre-sampling pool has not been built".into())
            })?;
            for &j in &pool.candidates {
                if valid(j, &out) {
                    out.push(j);
                    if out.len() == k {
                        return Ok((out, false));
                    }
                }
            }
            // pool exhausted; top up from the caller's stream
            let cap = 100 * k + 1000;
            for _ in 0..cap {
                let j = stats.sample_noise(rng);
                if valid(j, &out) {
                    out.push(j);
                    if out.len() == k {
                        return Ok((out, false));
                    }
                }
            }
            Ok((out, true))
        }
        SamplingMode::Batch => {
            let mut cum = Vec::with_capacity(batch.len());
            let mut acc = 0.0;
            for &j in batch {
                acc += stats.noise[j as usize];
                cum.push(acc);
            }
            if acc <= 0.0 {
                return Ok((out, true));
            }
            let cap = 100 * k + 10 * batch.len() + 1000;
            for _ in 0..cap {
                let r: f64 = rng.gen_range(0.0..acc);
                let idx = cum.partition_point(|&c| c <= r).min(batch.len() - 1);
                let j = batch[idx];
                if valid(j, &out) {
                    out.push(j);
                    if out.len() == k {
                        return Ok((out, false));
                    }
                }
            }
            Ok((out, true))
        }
    }
}
