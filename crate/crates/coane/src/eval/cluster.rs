//! Node clustering: k-means with k-means++ seeding, best of several
//! restarts by within-cluster sum of squares, scored by NMI against the
//! ground-truth labels.

use rand::Rng;
use rayon::prelude::*;

use crate::encoder::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::metrics::{nmi, NmiNorm};
use crate::eval::EvalReport;
use crate::rng::{stream, SALT_KMEANS};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One k-means run with k-means++ seeding. Returns (assignments, wcss).
fn kmeans_once(points: &[f64], n: usize, dim: usize, k: usize, seed: u64, restart: u64) -> (Vec<u32>, f64) {
    let mut rng = stream(seed, SALT_KMEANS, &[restart]);
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    // k-means++ seeding
    let mut centers: Vec<f64> = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centers[..dim])).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let r: f64 = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = i;
                    break;
                }
            }
            pick
        };
        let start = centers.len();
        centers.extend_from_slice(row(next));
        let c = &centers[start..start + dim];
        for i in 0..n {
            let d = sq_dist(row(i), c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assign = vec![0u32; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(row(i), &centers[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        // recompute centroids; empty clusters keep their previous center
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assign[i] as usize;
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for (dst, s) in centers[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..]) {
                *dst = s / counts[c] as f64;
            }
        }
    }
    let wcss: f64 = (0..n)
        .map(|i| sq_dist(row(i), &centers[assign[i] as usize * dim..(assign[i] as usize + 1) * dim]))
        .sum();
    (assign, wcss)
}

/// Best-of-restarts k-means on row-major points.
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64, restarts: usize) -> Result<Vec<u32>> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::Shape {
            expected: format!("row-major points with dim {dim}"),
            got: format!("{} values", points.len()),
        });
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::Validation(format!(
            "cannot make {k} clusters from {n} points"
        )));
    }
    let runs: Vec<(Vec<u32>, f64)> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| kmeans_once(points, n, dim, k, seed, r))
        .collect();
    // best by wcss; ties go to the earliest restart
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.1.partial_cmp(&b.1).unwrap().then(i.cmp(j)))
        .unwrap();
    Ok(best.1 .0)
}

/// Cluster embeddings into K = number of ground-truth classes and score NMI.
pub fn clustering_eval(
    z: &EmbeddingMatrix,
    labels: &[u32],
    seed: u64,
    restarts: usize,
    norm: NmiNorm,
) -> Result<EvalReport> {
    if labels.len() != z.n() {
        return Err(Error::Shape {
            expected: format!("{} labels", z.n()),
            got: format!("{}", labels.len()),
        });
    }
    let k = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    if k < 2 {
        return Err(Error::Validation(
            "clustering needs at least 2 ground-truth classes".into(),
        ));
    }
    let assign = kmeans(&z.z, z.dim, k, seed, restarts)?;
    let score = nmi(&assign, labels, norm);
    let mut report = EvalReport::new("node-clustering");
    report.metrics.insert("nmi".into(), score);
    report.params.insert("k".into(), k.to_string());
    report.params.insert("seed".into(), seed.to_string());
    report.params.insert("restarts".into(), restarts.to_string());
    Ok(report)
}
