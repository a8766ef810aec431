//! Random-walk generation and context-window extraction.
//!
//! Walks are first-order: each step samples a neighbor with probability
//! proportional to edge weight. A window of size `c` slides over every walk
//! position; the window centered at position p has midst walk[p], slots
//! beyond either end of the walk are PAD. Position 0 is always kept so every
//! node owns at least one context; other positions survive a
//! frequency-based subsampling coin.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NodeId};
use crate::rng::{stream, SALT_SUBSAMPLE, SALT_WALK};

/// A window slot: a node or padding.
pub type Slot = Option<NodeId>;

/// Which way the subsampling formula is read. `Keep` retains a window with
/// probability min(sqrt(t/f), 1); `Discard` retains it with probability
/// clamp(1 - sqrt(t/f), 0, 1). Walk-start positions are always retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsampleSense {
    #[default]
    Keep,
    Discard,
}

impl std::str::FromStr for SubsampleSense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep" => Ok(SubsampleSense::Keep),
            "discard" => Ok(SubsampleSense::Discard),
            other => Err(Error::Config(format!(
                "subsample_sense must be `keep` or `discard`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for SubsampleSense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SubsampleSense::Keep => "keep",
            SubsampleSense::Discard => "discard",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Walks started per node.
    pub walks_per_node: usize,
    /// Walk length in nodes.
    pub walk_length: usize,
    /// Context window size; odd, <= walk_length.
    pub context_size: usize,
    /// Subsampling threshold.
    pub threshold: f64,
    pub sense: SubsampleSense,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 1,
            walk_length: 80,
            context_size: 5,
            threshold: 1e-5,
            sense: SubsampleSense::Keep,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 {
            return Err(Error::Config("walks_per_node must be positive".into()));
        }
        if self.walk_length == 0 {
            return Err(Error::Config("walk_length must be positive".into()));
        }
        if self.context_size % 2 == 0 || self.context_size == 0 {
            return Err(Error::Config(format!(
                "context_size must be odd, got {}",
                self.context_size
            )));
        }
        if self.context_size > self.walk_length {
            return Err(Error::Config(format!(
                "context_size {} exceeds walk_length {}",
                self.context_size, self.walk_length
            )));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("subsample threshold must be positive".into()));
        }
        Ok(())
    }
}

/// One context window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    pub midst: NodeId,
    /// Length context_size; slots[(c-1)/2] == Some(midst).
    pub slots: Vec<Slot>,
    /// (walk index, position in walk) this window came from.
    pub origin: (u32, u32),
}

impl ContextWindow {
    pub fn pad_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_none()).count()
    }
}

/// All context windows of a run, grouped by midst node.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextCorpus {
    pub context_size: usize,
    /// windows[v] = every window with midst v, in global walk order.
    pub windows: Vec<Vec<ContextWindow>>,
    /// counts[v] = windows[v].len().
    pub counts: Vec<usize>,
    /// Relative token frequency f(v) over all walk tokens; sums to 1.
    pub token_freq: Vec<f64>,
}

impl ContextCorpus {
    pub fn n(&self) -> usize {
        self.windows.len()
    }

    pub fn total_windows(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Debug dump: one window per line, "midst<TAB>slot0,slot1,..." with PAD
    /// encoded as -1, in node order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for windows in &self.windows {
            for w in windows {
                write!(out, "{}\t", w.midst).unwrap();
                for (i, s) in w.slots.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    match s {
                        Some(v) => write!(out, "{v}").unwrap(),
                        None => out.push_str("-1"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parse the [`dump`](Self::dump) format back into (midst, slots) rows.
    pub fn parse_dump(text: &str) -> Result<Vec<(NodeId, Vec<Slot>)>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (midst, slots) = line.split_once('\t').ok_or_else(|| {
                Error::Validation(format!("corpus dump line {} lacks a tab", lineno + 1))
            })?;
            let midst: NodeId = midst
                .parse()
                .map_err(|_| Error::Validation(format!("bad midst on line {}", lineno + 1)))?;
            let slots = slots
                .split(',')
                .map(|tok| -> Result<Slot> {
                    let v: i64 = tok.parse().map_err(|_| {
                        Error::Validation(format!("bad slot `{tok}` on line {}", lineno + 1))
                    })?;
                    Ok(if v < 0 { None } else { Some(v as NodeId) })
                })
                .collect::<Result<Vec<Slot>>>()?;
            out.push((midst, slots));
        }
        Ok(out)
    }
}

/// Generate `walks_per_node * n` random walks. Walk (rep, start) draws from
/// its own RNG stream, so generation parallelizes without affecting results.
/// A walk from an isolated node is the singleton [start].
pub fn generate_walks(graph: &AttributedGraph, config: &WalkConfig) -> Result<Vec<Vec<NodeId>>> {
    config.validate()?;
    let n = graph.n();
    // cumulative weights per node for O(log deg) steps
    let cumulative: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut acc = 0.0;
            graph
                .neighbors(v as NodeId)
                .iter()
                .map(|&(_, w)| {
                    acc += w;
                    acc
                })
                .collect()
        })
        .collect();

    let jobs: Vec<(usize, NodeId)> = (0..config.walks_per_node)
        .flat_map(|rep| (0..n as NodeId).map(move |v| (rep, v)))
        .collect();
    let walks: Vec<Vec<NodeId>> = jobs
        .par_iter()
        .map(|&(rep, start)| {
            let mut rng = stream(config.seed, SALT_WALK, &[start as u64, rep as u64]);
            let mut walk = Vec::with_capacity(config.walk_length);
            walk.push(start);
            let mut cur = start;
            while walk.len() < config.walk_length {
                let cum = &cumulative[cur as usize];
                let Some(&total) = cum.last() else { break };
                let r: f64 = rng.gen_range(0.0..total);
                let idx = cum.partition_point(|&c| c <= r).min(cum.len() - 1);
                cur = graph.neighbors(cur)[idx].0;
                walk.push(cur);
            }
            walk
        })
        .collect();
    Ok(walks)
}

/// Relative frequency of each node over all walk tokens.
pub fn token_frequencies(walks: &[Vec<NodeId>], n: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    let mut total = 0usize;
    for walk in walks {
        for &v in walk {
            counts[v as usize] += 1;
            total += 1;
        }
    }
    assert!(total > 0, "token_frequencies requires nonempty walks");
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Probability that a window with this midst frequency is retained.
pub fn keep_probability(f_v: f64, t: f64, is_start: bool, sense: SubsampleSense) -> Result<f64> {
    if !(f_v > 0.0) {
        return Err(Error::Validation(format!(
            "token frequency must be positive, got {f_v}"
        )));
    }
    if is_start {
        return Ok(1.0);
    }
    let root = (t / f_v).sqrt();
    Ok(match sense {
        SubsampleSense::Keep => root.min(1.0),
        SubsampleSense::Discard => (1.0 - root).clamp(0.0, 1.0),
    })
}

/// Slide a size-c window over every walk position and apply subsampling.
/// `token_freq` must come from the same walks. Subsampling coins for walk i
/// draw from stream (seed, SALT_SUBSAMPLE, i), one coin per position > 0.
pub fn extract_contexts(
    walks: &[Vec<NodeId>],
    token_freq: &[f64],
    config: &WalkConfig,
) -> Result<ContextCorpus> {
    config.validate()?;
    let n = token_freq.len();
    let c = config.context_size;
    let half = (c - 1) / 2;
    let mut windows: Vec<Vec<ContextWindow>> = vec![Vec::new(); n];
    for (walk_idx, walk) in walks.iter().enumerate() {
        let mut rng = stream(config.seed, SALT_SUBSAMPLE, &[walk_idx as u64]);
        for (pos, &midst) in walk.iter().enumerate() {
            let keep = if pos == 0 {
                true
            } else {
                let p = keep_probability(
                    token_freq[midst as usize],
                    config.threshold,
                    false,
                    config.sense,
                )?;
                rng.gen::<f64>() < p
            };
            if !keep {
                continue;
            }
            let slots: Vec<Slot> = (0..c)
                .map(|s| {
                    let offset = s as isize - half as isize;
                    let p = pos as isize + offset;
                    if p < 0 || p >= walk.len() as isize {
                        None
                    } else {
                        Some(walk[p as usize])
                    }
                })
                .collect();
            windows[midst as usize].push(ContextWindow {
                midst,
                slots,
                origin: (walk_idx as u32, pos as u32),
            });
        }
    }
    let counts: Vec<usize> = windows.iter().map(|w| w.len()).collect();
    Ok(ContextCorpus {
        context_size: c,
        windows,
        counts,
        token_freq: token_freq.to_vec(),
    })
}

/// Walks, frequencies, and windows in one call.
pub fn build_corpus(graph: &AttributedGraph, config: &WalkConfig) -> Result<ContextCorpus> {
    let walks = generate_walks(graph, config)?;
    let freq = token_frequencies(&walks, graph.n());
    extract_contexts(&walks, &freq, config)
}
