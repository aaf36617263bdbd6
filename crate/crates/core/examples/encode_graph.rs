//! Encode one tissue graph with an untrained model and binarize the code.
//! Relabeling the nodes leaves the code unchanged.

use tissue_hash::gcn::{binarize, embed_graph, GcnHashParams, ModelDims};
use tissue_hash::graphcons::{build_tissue_graphs, MergeCriterion, TissueGraph};
use tissue_hash::ingest::{generate_synthetic_wsi, PatchAdjacency, SyntheticSpec};

fn reversed(g: &TissueGraph) -> TissueGraph {
    let n = g.num_nodes();
    let features = g.node_features.slice(ndarray::s![..;-1, ..]).to_owned();
    let pairs = g
        .adjacency
        .pairs
        .iter()
        .map(|&(a, b)| (n - 1 - a, n - 1 - b));
    TissueGraph {
        node_features: features,
        adjacency: PatchAdjacency::new(n, pairs).expect("valid pairs"),
        ..g.clone()
    }
}

fn main() -> tissue_hash::Result<()> {
    let spec = SyntheticSpec::default();
    let grid = generate_synthetic_wsi(&spec, 3)?;
    let graphs = build_tissue_graphs(&grid, 30, MergeCriterion::UnionEes)?;
    let g = &graphs[0];

    let dims = ModelDims {
        embed_dim: 32,
        ..ModelDims::acdc(spec.d_f)
    };
    println!(
        "model: L={} K={} d={} alpha={} d_h={}, {} parameters",
        dims.levels,
        dims.steps,
        dims.embed_dim,
        dims.alpha,
        dims.code_bits,
        GcnHashParams::init(dims.clone(), 0)?.num_parameters()
    );
    println!(
        "node schedule for {} nodes: {:?}",
        g.num_nodes(),
        dims.node_schedule(g.num_nodes())
    );
    let params = GcnHashParams::init(dims, 0)?;

    let y = embed_graph(g, &params)?;
    let code = binarize(y.view())?;
    let bits: String = code
        .iter()
        .map(|&b| if b > 0 { '1' } else { '0' })
        .collect();
    println!("{} -> {bits}", g.graph_id);

    let y_rev = embed_graph(&reversed(g), &params)?;
    let drift = (&y - &y_rev).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max |y - y(reversed nodes)| = {drift:e}");
    Ok(())
}
