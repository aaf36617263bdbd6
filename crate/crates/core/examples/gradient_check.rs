//! Compare backpropagated gradients with central differences on a small model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tissue_hash::gcn::{GcnHashParams, ModelDims};
use tissue_hash::graphcons::{GraphLabel, TissueGraph};
use tissue_hash::ingest::PatchAdjacency;
use tissue_hash::train::finite_diff_check;

fn path_graph(id: &str, n: usize, label: GraphLabel, rng: &mut ChaCha8Rng) -> TissueGraph {
    TissueGraph {
        graph_id: id.into(),
        wsi_id: "demo".into(),
        node_features: ndarray::Array2::from_shape_fn((n, 5), |_| rng.sample(StandardNormal)),
        adjacency: PatchAdjacency::new(n, (1..n).map(|i| (i - 1, i))).expect("path"),
        member_patch_ids: (0..n).collect(),
        label,
        tumor_fraction: if label == GraphLabel::Cancerous {
            1.0
        } else {
            0.0
        },
    }
}

fn main() -> tissue_hash::Result<()> {
    let dims = ModelDims {
        levels: 2,
        steps: 2,
        embed_dim: 8,
        alpha: 0.25,
        code_bits: 4,
        feature_dim: 5,
        max_nodes: 10,
        dropout: 0.0,
        dropout_on_pool: false,
    };
    let params = GcnHashParams::init(dims, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let graphs: Vec<TissueGraph> = [
        (3, GraphLabel::Cancerous),
        (6, GraphLabel::CancerFree),
        (8, GraphLabel::Cancerous),
        (10, GraphLabel::CancerFree),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(n, l))| path_graph(&format!("g{i}"), n, l, &mut rng))
    .collect();
    let batch: Vec<&TissueGraph> = graphs.iter().collect();

    for step in [1e-3, 1e-5, 1e-7] {
        let check = finite_diff_check(&params, &batch, 0.005, step, 200, 3)?;
        println!(
            "step {step:e}: max relative error {:.3e} over {} coordinates",
            check.max_relative_error, check.coordinates_checked
        );
        for (class, at, err) in &check.worst {
            println!("    {class:?}: worst {err:.3e} at {at}");
        }
    }
    Ok(())
}
