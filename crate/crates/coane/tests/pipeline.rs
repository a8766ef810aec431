//! Library-level integration checks on the real Cora dataset: loader
//! counts, corpus bounds, embedding shapes, and the link split sizes.

use std::path::PathBuf;
use std::sync::OnceLock;

use coane::encoder::{init_parameters, refresh_all_embeddings, SparseAttrs};
use coane::eval::linkpred::make_link_split;
use coane::graph::AttributedGraph;
use coane::sampler::{build_corpus, generate_walks};
use coane::trainer::TrainConfig;

fn cora() -> &'static AttributedGraph {
    static G: OnceLock<AttributedGraph> = OnceLock::new();
    G.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
        let (graph, _) = AttributedGraph::load_linqs(
            root.join("data/cora/cora.content"),
            root.join("data/cora/cora.cites"),
        )
        .expect("data/cora must be present");
        graph
    })
}

#[test]
fn cora_loader_matches_published_counts() {
    let g = cora();
    assert_eq!(g.n(), 2708);
    assert_eq!(g.d(), 1433);
    assert_eq!(g.edge_count(), 5278);
    assert_eq!(g.num_classes(), 7);
    assert!(g.labels().is_some());
}

#[test]
fn cora_walks_and_corpus_respect_bounds() {
    let g = cora();
    let cfg = TrainConfig::default(); // r = 1, l = 80, t = 1e-5
    let walks = generate_walks(g, &cfg.walk_config()).unwrap();
    assert_eq!(walks.len(), 2708);
    assert!(walks.iter().all(|w| w.len() <= 80));

    let corpus = build_corpus(g, &cfg.walk_config()).unwrap();
    // every position-0 window is forced, so each node owns at least one
    assert!(corpus.counts.iter().all(|&c| c >= 1));
    // subsampling can only discard, never add
    let total_tokens: usize = walks.iter().map(|w| w.len()).sum();
    assert!(corpus.total_windows() <= total_tokens);
    assert!(total_tokens <= 2708 * 80);
}

#[test]
fn cora_embeddings_have_published_shape() {
    let g = cora();
    let cfg = TrainConfig {
        context_size: 3,
        ..TrainConfig::default()
    };
    let corpus = build_corpus(g, &cfg.walk_config()).unwrap();
    let attrs = SparseAttrs::from_graph(g);
    let (bank, _, _) = init_parameters(g.n(), g.d(), 128, 3, 128, 128, 1).unwrap();
    let z = refresh_all_embeddings(&corpus, &attrs, &bank).unwrap();
    assert_eq!(z.n(), 2708);
    assert_eq!(z.dim, 128);
    assert_eq!(z.left(0).len(), 64);
}

#[test]
fn cora_split_keeps_seventy_percent_for_training() {
    let g = cora();
    let split = make_link_split(g, 0).unwrap();
    assert_eq!(split.train_pos.len(), (0.7f64 * 5278.0).floor() as usize);
    let residual = split.residual_graph(g);
    assert_eq!(residual.edge_count(), 3694);
    assert_eq!(residual.n(), 2708);
}
