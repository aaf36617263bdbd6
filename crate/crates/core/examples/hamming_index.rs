//! Build a Hamming index of random 48-bit codes, query it, search by radius,
//! and round-trip it through an index file.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tissue_hash::graphcons::GraphLabel;
use tissue_hash::index::{
    load_index, save_index, BinaryCode, BinaryCodeIndex, BucketTable, IndexEntry,
};

fn main() -> tissue_hash::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let items: Vec<_> = (0..20_000)
        .map(|i| {
            let entry = IndexEntry {
                graph_id: format!("g{i:05}"),
                wsi_id: format!("w{:03}", i / 100),
                label: if i % 3 == 0 {
                    GraphLabel::Cancerous
                } else {
                    GraphLabel::CancerFree
                },
            };
            (entry, BinaryCode::random(48, &mut rng))
        })
        .collect();
    let index = BinaryCodeIndex::from_entries(48, items.clone())?;

    // Query with a stored code with three bits flipped.
    let mut signs = items[1234].1.to_signs();
    for b in [0, 17, 40] {
        signs[b] = -signs[b];
    }
    let query = BinaryCode::from_signs(&signs);
    let start = Instant::now();
    let top = index.query("probe", &query, 5)?;
    println!("top 5 in {:.3} ms:", start.elapsed().as_secs_f64() * 1e3);
    for hit in &top.ranked {
        println!("    {} d={} {}", hit.graph_id, hit.distance, hit.label);
    }

    // Bucket probing enumerates every code in the ball, so keep it to small
    // radii; the linear scan handles any radius.
    let buckets = BucketTable::build(&index);
    for radius in 0..=3 {
        let probed = buckets.within_radius(&query, radius)?;
        assert_eq!(probed, index.within_radius(&query, radius)?);
        println!("within radius {radius}: {} codes", probed.len());
    }
    println!(
        "within radius 12 (scan): {} codes",
        index.within_radius(&query, 12)?.len()
    );

    let path = std::env::temp_dir().join("hamming-example.ghix");
    save_index(&index, &path)?;
    let back = load_index(&path)?;
    println!("{} entries reloaded from {}", back.len(), path.display());
    Ok(())
}
