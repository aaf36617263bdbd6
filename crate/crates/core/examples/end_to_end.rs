//! Synthetic slides → tissue graphs → trained hash model → index → mAP.
//!
//! `cargo run --release --example end_to_end -- [epochs] [seed]`

use std::time::Instant;

use tissue_hash::eval::{mean_average_precision, RelevanceTable};
use tissue_hash::gcn::ModelDims;
use tissue_hash::graphcons::{build_tissue_graphs, GraphLabel, MergeCriterion};
use tissue_hash::index::{build_index, encode_code};
use tissue_hash::ingest::{generate_synthetic_wsi_named, SyntheticSpec};
use tissue_hash::pipeline::derive_seed;
use tissue_hash::train::train;
use tissue_hash::{TissueGraph, TrainConfig};

fn graphs_for(split: &str, count: usize, spec: &SyntheticSpec, seed: u64) -> Vec<TissueGraph> {
    let mut out = Vec::new();
    for i in 0..count {
        let id = format!("{split}-{i:03}");
        let s = derive_seed(seed, &format!("ingest/{split}/{i}"));
        let grid = generate_synthetic_wsi_named(spec, s, &id).unwrap();
        out.extend(build_tissue_graphs(&grid, 20, MergeCriterion::UnionEes).unwrap());
    }
    out
}

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(300, |s| s.parse().unwrap());
    let seed: u64 = args.next().map_or(1, |s| s.parse().unwrap());

    let spec = SyntheticSpec::default();
    let database = graphs_for("database", 20, &spec, seed);
    let queries: Vec<_> = graphs_for("query", 5, &spec, seed)
        .into_iter()
        .filter(|g| g.label != GraphLabel::Excluded)
        .collect();
    let count = |gs: &[TissueGraph], l| gs.iter().filter(|g| g.label == l).count();
    println!(
        "database: {} graphs ({} cancerous, {} cancer-free)  queries: {}",
        database.len(),
        count(&database, GraphLabel::Cancerous),
        count(&database, GraphLabel::CancerFree),
        queries.len()
    );

    let config = TrainConfig {
        epochs,
        seed: derive_seed(seed, "train"),
        dims: ModelDims {
            embed_dim: 32,
            ..ModelDims::acdc(spec.d_f)
        },
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let outcome = train(&database, &config).unwrap();
    println!(
        "trained {epochs} epochs in {:.1}s, loss {:.4} -> {:.4}",
        start.elapsed().as_secs_f64(),
        outcome.history[0],
        outcome.history.last().unwrap()
    );

    let index = build_index(&database, &outcome.params).unwrap();
    let results: Vec<_> = queries
        .iter()
        .map(|q| {
            index
                .rank_all(&q.graph_id, &encode_code(q, &outcome.params).unwrap())
                .unwrap()
        })
        .collect();
    let labels: Vec<_> = queries.iter().map(|q| q.label).collect();
    let table = RelevanceTable::from_results(&results, &labels).unwrap();
    println!("mAP = {:.4}", mean_average_precision(&table).unwrap());
}
