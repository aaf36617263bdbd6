//! Generate a synthetic slide, draw its tumor map, and round-trip it
//! through a feature file.
//!
//! `cargo run --example synthetic_wsi -- [seed]`

use tissue_hash::ingest::{
    generate_synthetic_wsi, load_patch_grid, patch_adjacency, save_patch_grid, SyntheticSpec,
};

fn main() -> tissue_hash::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(7, |s| s.parse().expect("seed"));
    let spec = SyntheticSpec {
        rows: 12,
        cols: 20,
        blobs: 2,
        ..SyntheticSpec::default()
    };
    let grid = generate_synthetic_wsi(&spec, seed)?;

    // '.' background, 'o' normal tissue, '+' tumor margin, '#' tumor
    let mut map = vec![vec!['.'; grid.cols]; grid.rows];
    for (&(r, c), &t) in grid.grid_pos.iter().zip(&grid.tumor_ratio) {
        map[r][c] = match t {
            t if t >= 1.0 => '#',
            t if t > 0.0 => '+',
            _ => 'o',
        };
    }
    for row in map {
        println!("{}", row.into_iter().collect::<String>());
    }
    println!(
        "{} tissue patches, {} lattice edges, feature width {}",
        grid.num_patches(),
        patch_adjacency(&grid).pairs.len(),
        grid.feature_dim()
    );

    let path = std::env::temp_dir().join(format!("synthetic-{seed}.pgf"));
    save_patch_grid(&grid, &path)?;
    let back = load_patch_grid(&path)?;
    println!(
        "round trip through {}: equal = {}",
        path.display(),
        back.features == grid.features
    );
    Ok(())
}
