//! Whole pipeline from a config string: ingest, graphs, training, index,
//! evaluation. Writes under the system temp directory.

use tissue_hash::config::KeyValues;
use tissue_hash::pipeline::{run_pipeline, PipelineConfig};

fn main() -> tissue_hash::Result<()> {
    let root = std::env::temp_dir().join("tissue-hash-example");
    let kv: KeyValues = format!(
        "out_dir = {}
seed = 1
n_bar = 20,40
database_wsis = 8
query_wsis = 3
epochs = 40
embed_dim = 32
",
        root.display()
    )
    .parse()?;
    let config = PipelineConfig::from_key_values(&kv)?;
    let report = run_pipeline(&config)?;
    for s in &report.skipped {
        println!("up to date: {s}");
    }
    println!("n_bar  AP50    mAP");
    for row in &report.metrics {
        println!("{:>5}  {:.4}  {:.4}", row.n_bar, row.ap_at_50, row.map);
    }
    println!("artifacts in {}", root.display());
    Ok(())
}
