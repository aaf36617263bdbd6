//! Partition a slide into spatially connected tissue graphs and label them.
//!
//! `cargo run --example tissue_graphs -- [n_bar] [ward]`

use tissue_hash::graphcons::{build_tissue_graphs, target_graph_count, GraphLabel, MergeCriterion};
use tissue_hash::ingest::{generate_synthetic_wsi, SyntheticSpec};

fn main() -> tissue_hash::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_bar: usize = args.next().map_or(12, |s| s.parse().expect("n_bar"));
    let criterion = match args.next().as_deref() {
        Some("ward") => MergeCriterion::WardIncrease,
        _ => MergeCriterion::UnionEes,
    };
    let spec = SyntheticSpec {
        rows: 12,
        cols: 20,
        blobs: 2,
        ..SyntheticSpec::default()
    };
    let grid = generate_synthetic_wsi(&spec, 7)?;
    let graphs = build_tissue_graphs(&grid, n_bar, criterion)?;
    println!(
        "{} patches, n_bar {n_bar} -> target {} graphs, got {} ({criterion})",
        grid.num_patches(),
        target_graph_count(grid.num_patches(), n_bar),
        graphs.len()
    );

    // Each graph drawn with its own letter; uppercase = cancerous.
    let mut map = vec![vec![' '; grid.cols]; grid.rows];
    for (gi, g) in graphs.iter().enumerate() {
        let base = (b'a' + (gi % 26) as u8) as char;
        let ch = if g.label == GraphLabel::Cancerous {
            base.to_ascii_uppercase()
        } else {
            base
        };
        for &p in &g.member_patch_ids {
            let (r, c) = grid.grid_pos[p];
            map[r][c] = ch;
        }
    }
    for row in map {
        println!("{}", row.into_iter().collect::<String>());
    }
    for g in &graphs {
        println!(
            "{:<10} nodes {:>3}  edges {:>3}  tumor {:>5.3}  {}",
            g.graph_id,
            g.num_nodes(),
            g.adjacency.pairs.len(),
            g.tumor_fraction,
            g.label
        );
    }
    Ok(())
}
