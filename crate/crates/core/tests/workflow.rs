//! File formats, training runs, the index and the command line.

mod common;

use std::path::Path;
use std::process::Command;

use ndarray::Array1;
use rand::Rng;

use tissue_hash::config::KeyValues;
use tissue_hash::gcn::{load_checkpoint, GcnHashParams, ModelDims};
use tissue_hash::graphcons::{build_tissue_graphs, GraphLabel, MergeCriterion, TissueGraph};
use tissue_hash::index::{
    build_index, decode_index, encode_code, encode_index, load_index, save_index, BinaryCode,
    BinaryCodeIndex, IndexEntry,
};
use tissue_hash::ingest::{
    generate_synthetic_wsi, load_feature_dir, load_patch_grid, save_patch_grid, write_manifest,
    SyntheticSpec,
};
use tissue_hash::pipeline::{run_pipeline, PipelineConfig};
use tissue_hash::train::{train, TrainConfig, DEFAULT_LAMBDA};

use common::*;

// ---------------------------------------------------------------------------
// Ingest

#[test]
fn feature_file_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        rows: 9,
        cols: 13,
        d_f: 7,
        ..SyntheticSpec::default()
    };
    let grid = generate_synthetic_wsi(&spec, 5).unwrap();
    let path = dir.path().join("slide.pgf");
    save_patch_grid(&grid, &path).unwrap();
    let back = load_patch_grid(&path).unwrap();
    assert_eq!(back.grid_pos, grid.grid_pos);
    assert_eq!(back.tumor_ratio, grid.tumor_ratio);
    assert!(back
        .features
        .iter()
        .zip(&grid.features)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn manifest_names_the_slides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        rows: 4,
        cols: 4,
        d_f: 2,
        ..SyntheticSpec::default()
    };
    save_patch_grid(
        &generate_synthetic_wsi(&spec, 1).unwrap(),
        &dir.path().join("x.pgf"),
    )
    .unwrap();
    save_patch_grid(
        &generate_synthetic_wsi(&spec, 2).unwrap(),
        &dir.path().join("y.pgf"),
    )
    .unwrap();
    write_manifest(
        dir.path(),
        &[
            ("x.pgf".into(), "slide-x".into()),
            ("y.pgf".into(), "slide-y".into()),
        ],
    )
    .unwrap();
    let grids = load_feature_dir(dir.path()).unwrap();
    let ids: Vec<_> = grids.iter().map(|g| g.wsi_id.as_str()).collect();
    assert_eq!(ids, ["slide-x", "slide-y"]);
}

#[test]
fn wide_separation_is_linearly_obvious() {
    // One class per tumor-ratio level; classify each patch by its nearest class mean.
    let spec = SyntheticSpec {
        rows: 24,
        cols: 24,
        blobs: 3,
        separation: 10.0,
        ..SyntheticSpec::default()
    };
    let grids: Vec<_> = (0..6)
        .map(|s| generate_synthetic_wsi(&spec, 100 + s).unwrap())
        .collect();
    let key = |t: f64| (t * 2.0).round() as usize;
    let mut sums = vec![Array1::<f64>::zeros(spec.d_f); 3];
    let mut counts = [0usize; 3];
    for g in &grids {
        for (row, &t) in g.features.rows().into_iter().zip(&g.tumor_ratio) {
            sums[key(t)] += &row;
            counts[key(t)] += 1;
        }
    }
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
    let means: Vec<Array1<f64>> = sums.iter().zip(counts).map(|(s, c)| s / c as f64).collect();
    let (mut right, mut total) = (0, 0);
    for g in &grids {
        for (row, &t) in g.features.rows().into_iter().zip(&g.tumor_ratio) {
            let guess = (0..3)
                .min_by(|&a, &b| {
                    let da = (&row - &means[a]).mapv(|v| v * v).sum();
                    let db = (&row - &means[b]).mapv(|v| v * v).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            right += usize::from(guess == key(t));
            total += 1;
        }
    }
    let accuracy = right as f64 / total as f64;
    assert!(accuracy >= 0.99, "{accuracy} over {total} patches");
}

// ---------------------------------------------------------------------------
// Training

fn tiny_config(seed: u64, epochs: usize, feature_dim: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        batch_size: 4,
        learning_rate: 1e-2,
        dims: ModelDims {
            levels: 2,
            steps: 2,
            embed_dim: 8,
            alpha: 0.25,
            code_bits: 8,
            feature_dim,
            max_nodes: 16,
            dropout: 0.5,
            dropout_on_pool: true,
        },
        ..TrainConfig::default()
    }
}

#[test]
fn two_graph_training_reduces_the_loss() {
    let mut r = rng(1);
    let graphs = vec![
        random_graph("a", 6, 4, GraphLabel::Cancerous, &mut r),
        random_graph("b", 7, 4, GraphLabel::CancerFree, &mut r),
    ];
    let out = train(&graphs, &tiny_config(3, 200, 4)).unwrap();
    assert_eq!(out.history.len(), 200);
    assert!(
        out.history.last().unwrap() < &out.history[0],
        "{:?}",
        (out.history[0], out.history.last())
    );
}

#[test]
fn fixed_seed_gives_bit_identical_history() {
    let mut r = rng(2);
    let graphs: Vec<TissueGraph> = (0..9)
        .map(|i| {
            let l = if i % 3 == 0 {
                GraphLabel::Cancerous
            } else {
                GraphLabel::CancerFree
            };
            random_graph(&format!("g{i}"), r.random_range(2..12), 4, l, &mut r)
        })
        .collect();
    let a = train(&graphs, &tiny_config(42, 15, 4)).unwrap();
    let b = train(&graphs, &tiny_config(42, 15, 4)).unwrap();
    let bits = |h: &[f64]| h.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.history), bits(&b.history));
    assert_eq!(a.params, b.params);
    let c = train(&graphs, &tiny_config(43, 15, 4)).unwrap();
    assert_ne!(bits(&a.history), bits(&c.history));
}

#[test]
fn excluded_graphs_are_not_trained_on() {
    let mut r = rng(4);
    let mut graphs: Vec<TissueGraph> = (0..4)
        .map(|i| {
            let l = if i % 2 == 0 {
                GraphLabel::Cancerous
            } else {
                GraphLabel::CancerFree
            };
            random_graph(&format!("g{i}"), 5, 3, l, &mut r)
        })
        .collect();
    let base = train(&graphs, &tiny_config(5, 3, 3)).unwrap();
    let mut extra = random_graph("x", 5, 3, GraphLabel::CancerFree, &mut r);
    extra.label = GraphLabel::Excluded;
    graphs.push(extra);
    let with_excluded = train(&graphs, &tiny_config(5, 3, 3)).unwrap();
    assert_eq!(base.history, with_excluded.history);
}

#[test]
fn omitted_lambda_takes_the_default() {
    let cfg = TrainConfig::from_key_values(&"epochs = 3".parse::<KeyValues>().unwrap()).unwrap();
    assert_eq!(cfg.lambda, 0.005);
    assert_eq!(DEFAULT_LAMBDA, 0.005);
}

// ---------------------------------------------------------------------------
// Index

fn synthetic_database(count: usize) -> (Vec<TissueGraph>, GcnHashParams) {
    let spec = SyntheticSpec {
        d_f: 6,
        ..SyntheticSpec::default()
    };
    let mut graphs = Vec::new();
    let mut seed = 0;
    while graphs.len() < count {
        let grid = generate_synthetic_wsi(&spec, seed).unwrap();
        graphs.extend(build_tissue_graphs(&grid, 20, MergeCriterion::UnionEes).unwrap());
        seed += 1;
    }
    graphs.truncate(count);
    let params = GcnHashParams::init(
        ModelDims {
            embed_dim: 16,
            ..ModelDims::acdc(6)
        },
        9,
    )
    .unwrap();
    (graphs, params)
}

#[test]
fn rebuilding_from_one_checkpoint_is_byte_identical() {
    let (graphs, params) = synthetic_database(100);
    let a = encode_index(&build_index(&graphs, &params).unwrap());
    let b = encode_index(&build_index(&graphs, &params).unwrap());
    assert_eq!(a, b);
    let labeled = graphs
        .iter()
        .filter(|g| g.label != GraphLabel::Excluded)
        .count();
    assert_eq!(decode_index(&a).unwrap().len(), labeled);
}

#[test]
fn identical_graphs_get_identical_codes() {
    let (graphs, params) = synthetic_database(1);
    let mut twin = graphs[0].clone();
    twin.graph_id = "twin".into();
    assert_eq!(
        encode_code(&graphs[0], &params).unwrap(),
        encode_code(&twin, &params).unwrap()
    );
    assert!(build_index(&[], &params).unwrap().is_empty());
}

#[test]
fn large_index_round_trip_preserves_every_bit() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(6);
    let items: Vec<(IndexEntry, BinaryCode)> = (0..50_000)
        .map(|i| {
            (
                IndexEntry {
                    graph_id: format!("g{i:06}"),
                    wsi_id: format!("w{:04}", i / 100),
                    label: if r.random::<bool>() {
                        GraphLabel::Cancerous
                    } else {
                        GraphLabel::CancerFree
                    },
                },
                BinaryCode::random(48, &mut r),
            )
        })
        .collect();
    let index = BinaryCodeIndex::from_entries(48, items.clone()).unwrap();
    let path = dir.path().join("big.ghix");
    save_index(&index, &path).unwrap();
    let back = load_index(&path).unwrap();
    assert_eq!(back.len(), items.len());
    for (i, (entry, code)) in items.iter().enumerate() {
        assert_eq!(&back.entries()[i], entry);
        assert_eq!(back.code(i).to_signs(), code.to_signs());
    }
}

// ---------------------------------------------------------------------------
// Pipeline and command line

fn quick_pipeline(root: &Path, n_bar: &str) -> PipelineConfig {
    let kv: KeyValues = format!(
        "out_dir = {}\nn_bar = {n_bar}\ndatabase_wsis = 4\nquery_wsis = 2\nepochs = 2\nembed_dim = 8\ncode_bits = 16\nsynthetic.rows = 10\nsynthetic.cols = 10\nsynthetic.d_f = 4\n",
        root.display()
    )
    .parse()
    .unwrap();
    PipelineConfig::from_key_values(&kv).unwrap()
}

#[test]
fn n_bar_sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_pipeline(dir.path(), "30,50,70");
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(
        report.metrics.iter().map(|m| m.n_bar).collect::<Vec<_>>(),
        [30, 50, 70]
    );
    let csv = std::fs::read_to_string(dir.path().join("reports/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().next(), Some("n_bar,AP50,mAP"));
    for n in [30, 50, 70] {
        assert!(dir.path().join(format!("model.n{n}.ghck")).exists());
        assert!(dir
            .path()
            .join(format!("reports/n{n}/pr_curve.csv"))
            .exists());
        load_checkpoint(&dir.path().join(format!("model.n{n}.ghck"))).unwrap();
    }
}

#[test]
fn rerun_skips_up_to_date_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_pipeline(dir.path(), "20");
    let first = run_pipeline(&cfg).unwrap();
    assert!(first.skipped.is_empty());
    let metrics = std::fs::read(dir.path().join("reports/metrics.csv")).unwrap();
    let second = run_pipeline(&cfg).unwrap();
    assert!(!second.skipped.is_empty());
    assert_eq!(
        std::fs::read(dir.path().join("reports/metrics.csv")).unwrap(),
        metrics
    );
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tissue-hash"))
}

#[test]
fn command_line_stages_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let out = cli().args(args).current_dir(d).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    std::fs::write(d.join("spec.cfg"), "rows = 10\ncols = 10\nd_f = 4\n").unwrap();
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        run(&[
            "ingest",
            "gen",
            "--spec",
            "spec.cfg",
            "--seed",
            &i.to_string(),
            "--out",
            &format!("features/{name}.pgf"),
        ]);
    }
    run(&[
        "graphs",
        "build",
        "--features",
        "features",
        "--nbar",
        "15",
        "--out",
        "graphs",
    ]);
    std::fs::write(
        d.join("train.cfg"),
        "epochs = 2\nembed_dim = 8\ncode_bits = 16\nmax_nodes = 64\n",
    )
    .unwrap();
    run(&[
        "train",
        "--graphs",
        "graphs",
        "--config",
        "train.cfg",
        "--seed",
        "3",
        "--out",
        "model.ghck",
        "--history",
        "history.csv",
    ]);
    assert!(std::fs::read_to_string(d.join("history.csv"))
        .unwrap()
        .starts_with("epoch,loss\n"));
    run(&[
        "index",
        "build",
        "--graphs",
        "graphs",
        "--checkpoint",
        "model.ghck",
        "--index",
        "index.ghix",
    ]);
    let hits = run(&[
        "index",
        "query",
        "--code-from",
        "graphs/a.tgf",
        "--k",
        "3",
        "--checkpoint",
        "model.ghck",
        "--index",
        "index.ghix",
    ]);
    assert!(hits.starts_with("query_id\trank\tgraph_id\tdistance\tlabel\n"));
    run(&[
        "eval",
        "run",
        "--queries",
        "graphs",
        "--nbar",
        "15",
        "--checkpoint",
        "model.ghck",
        "--index",
        "index.ghix",
        "--out",
        "reports",
    ]);
    assert!(d.join("reports/metrics.csv").exists());
    assert!(d.join("reports/pr_curve.csv").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| {
        let out = cli().args(args).current_dir(d).output().unwrap();
        let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
        (out.status.code(), stderr)
    };
    let (c, err) = code(&[
        "index",
        "query",
        "--code-from",
        "x.tgf",
        "--index",
        "i.ghix",
    ]);
    assert_eq!(c, Some(2));
    assert!(err.starts_with("error kind=config code=2 "), "{err}");
    let (c, _) = code(&["pipeline", "all", "--config", "missing.cfg"]);
    assert_eq!(c, Some(2));
    std::fs::write(d.join("bad.pgf"), b"PGF1 not really").unwrap();
    let (c, err) = code(&[
        "graphs",
        "build",
        "--features",
        ".",
        "--nbar",
        "5",
        "--out",
        "g",
    ]);
    assert_eq!(c, Some(3), "{err}");
}
