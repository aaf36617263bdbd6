//! End-to-end orchestration: synthesize or ingest features, build graphs,
//! train, index and evaluate.
//!
//! Each stage writes a stamp next to its output holding a SHA-256 over its
//! inputs; a stage whose stamp matches is skipped. All randomness descends
//! from one master seed through [`derive_seed`].

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::binio::{read_file, write_file};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::eval::{
    average_precision_at_k, interpolated_pr_curve, mean_average_precision, write_metrics_csv,
    write_pr_curve_csv, MetricsRow, RelevanceTable,
};
use crate::gcn::{load_checkpoint, save_checkpoint};
use crate::graphcons::{
    build_tissue_graphs, load_graph_dir, save_graphs, GraphLabel, MergeCriterion,
};
use crate::index::{build_index, encode_code, load_index, save_index};
use crate::ingest::{
    feature_file_name, generate_synthetic_wsi_named, load_feature_dir, manifest_entries,
    save_patch_grid, write_manifest, SyntheticSpec,
};
use crate::train::{train, write_history_csv, TrainConfig, TRAIN_KEYS};

/// Stage seed: first eight bytes of `SHA-256(label ‖ seed)`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(master.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub features_dir: PathBuf,
    pub graphs_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub reports_dir: PathBuf,
    /// Mean nodes per graph; several values run a sweep.
    pub n_bars: Vec<usize>,
    /// Depth `k` of the AP(k) metric.
    pub eval_depth: usize,
    pub seed: u64,
    /// Generate synthetic slides instead of reading `features_dir`.
    pub synthetic: bool,
    pub database_wsis: usize,
    pub query_wsis: usize,
    pub synthetic_spec: SyntheticSpec,
    pub merge_criterion: MergeCriterion,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::rooted(Path::new("run"))
    }
}

const PIPELINE_KEYS: &[&str] = &[
    "out_dir",
    "features_dir",
    "graphs_dir",
    "checkpoint",
    "index",
    "reports_dir",
    "n_bar",
    "eval_depth",
    "seed",
    "synthetic",
    "database_wsis",
    "query_wsis",
    "merge_criterion",
];

impl PipelineConfig {
    /// Default layout under one output directory.
    pub fn rooted(root: &Path) -> Self {
        PipelineConfig {
            features_dir: root.join("features"),
            graphs_dir: root.join("graphs"),
            checkpoint: Some(root.join("model.ghck")),
            index: Some(root.join("index.ghix")),
            reports_dir: root.join("reports"),
            n_bars: vec![50],
            eval_depth: 50,
            seed: 1,
            synthetic: true,
            database_wsis: 20,
            query_wsis: 5,
            synthetic_spec: SyntheticSpec::default(),
            merge_criterion: MergeCriterion::UnionEes,
            train: TrainConfig::default(),
        }
    }

    /// Keys: the pipeline keys above, every training key, and synthetic-slide
    /// keys prefixed with `synthetic.`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let root = kv.get("out_dir").unwrap_or("run");
        let mut cfg = PipelineConfig::rooted(Path::new(root));
        let path = |key: &str, slot: &mut PathBuf| {
            if let Some(v) = kv.get(key) {
                *slot = PathBuf::from(v);
            }
        };
        path("features_dir", &mut cfg.features_dir);
        path("graphs_dir", &mut cfg.graphs_dir);
        path("reports_dir", &mut cfg.reports_dir);
        if let Some(v) = kv.get("checkpoint") {
            cfg.checkpoint = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = kv.get("index") {
            cfg.index = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = kv.get("n_bar") {
            cfg.n_bars = v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad n_bar entry `{s}`")))
                })
                .collect::<Result<_>>()?;
        }
        kv.read_into("eval_depth", &mut cfg.eval_depth)?;
        kv.read_into("seed", &mut cfg.seed)?;
        kv.read_into("synthetic", &mut cfg.synthetic)?;
        kv.read_into("database_wsis", &mut cfg.database_wsis)?;
        kv.read_into("query_wsis", &mut cfg.query_wsis)?;
        kv.read_into("merge_criterion", &mut cfg.merge_criterion)?;

        let mut synth = KeyValues::new();
        let mut rest = KeyValues::new();
        for key in kv.keys() {
            let value = kv.get(key).unwrap();
            if let Some(stripped) = key.strip_prefix("synthetic.") {
                synth.set(stripped, value);
            } else if !PIPELINE_KEYS.contains(&key) {
                rest.set(key, value);
            }
        }
        rest.reject_unknown(TRAIN_KEYS)?;
        cfg.synthetic_spec = SyntheticSpec::from_key_values(&synth)
            .map_err(|e| Error::Config(format!("synthetic spec: {e}")))?;
        cfg.train = TrainConfig::from_key_values(&rest)?;
        if rest.get("seed").is_none() {
            cfg.train.seed = derive_seed(cfg.seed, "train");
        }
        if rest.get("feature_dim").is_none() && cfg.synthetic {
            cfg.train.dims.feature_dim = cfg.synthetic_spec.d_f;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bars.is_empty() || self.n_bars.contains(&0) {
            return Err(Error::Config("n_bar values must be positive".into()));
        }
        if self.eval_depth == 0 {
            return Err(Error::Config("eval_depth must be >= 1".into()));
        }
        if self.synthetic {
            if self.database_wsis == 0 || self.query_wsis == 0 {
                return Err(Error::Config(
                    "synthetic runs need database_wsis and query_wsis >= 1".into(),
                ));
            }
            self.synthetic_spec
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.train.validate()
    }

    pub fn checkpoint_path(&self) -> Result<&Path> {
        self.checkpoint
            .as_deref()
            .ok_or_else(|| Error::Config("no checkpoint path configured".into()))
    }

    pub fn index_path(&self) -> Result<&Path> {
        self.index
            .as_deref()
            .ok_or_else(|| Error::Config("no index path configured".into()))
    }

    fn per_nbar(&self, base: &Path, n_bar: usize) -> PathBuf {
        if self.n_bars.len() == 1 {
            return base.to_path_buf();
        }
        let stem = base.file_stem().unwrap_or_default().to_string_lossy();
        let name = match base.extension() {
            Some(ext) => format!("{stem}.n{n_bar}.{}", ext.to_string_lossy()),
            None => format!("{stem}.n{n_bar}"),
        };
        base.with_file_name(name)
    }

    pub fn database_features(&self) -> PathBuf {
        self.features_dir.join("database")
    }

    pub fn query_features(&self) -> PathBuf {
        self.features_dir.join("query")
    }

    pub fn graph_dir(&self, n_bar: usize, split: &str) -> PathBuf {
        self.graphs_dir.join(format!("n{n_bar}")).join(split)
    }

    pub fn checkpoint_for(&self, n_bar: usize) -> Result<PathBuf> {
        Ok(self.per_nbar(self.checkpoint_path()?, n_bar))
    }

    pub fn index_for(&self, n_bar: usize) -> Result<PathBuf> {
        Ok(self.per_nbar(self.index_path()?, n_bar))
    }

    pub fn report_dir_for(&self, n_bar: usize) -> PathBuf {
        self.reports_dir.join(format!("n{n_bar}"))
    }
}

// ---------------------------------------------------------------------------
// Stamps

struct Fingerprint(Sha256);

impl Fingerprint {
    fn new(stage: &str) -> Self {
        let mut h = Sha256::new();
        h.update(stage.as_bytes());
        Fingerprint(h)
    }

    fn text(&mut self, s: &str) -> &mut Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    fn file(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = read_file(path)?;
        self.text(&path.file_name().unwrap_or_default().to_string_lossy());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(&bytes);
        Ok(self)
    }

    fn dir(&mut self, dir: &Path) -> Result<&mut Self> {
        for f in sorted_files(dir)? {
            self.file(&f)?;
        }
        Ok(self)
    }

    fn hex(self) -> String {
        self.0
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.extension().is_some_and(|x| x == "stamp"))
        .collect();
    files.sort();
    Ok(files)
}

fn stamp_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".stamp");
    PathBuf::from(s)
}

fn up_to_date(output: &Path, fingerprint: &str) -> bool {
    output.exists()
        && std::fs::read_to_string(stamp_path(output)).is_ok_and(|s| s.trim() == fingerprint)
}

fn write_stamp(output: &Path, fingerprint: &str) -> Result<()> {
    write_file(&stamp_path(output), format!("{fingerprint}\n").as_bytes())
}

// ---------------------------------------------------------------------------
// Stages

/// Write `count` synthetic slides plus a manifest into `dir`.
pub fn ingest_synthetic(
    spec: &SyntheticSpec,
    count: usize,
    master_seed: u64,
    split: &str,
    dir: &Path,
) -> Result<()> {
    let mut grids = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("{split}-{i:03}");
        let seed = derive_seed(master_seed, &format!("ingest/{split}/{i}"));
        let grid = generate_synthetic_wsi_named(spec, seed, &id)?;
        save_patch_grid(&grid, &dir.join(feature_file_name(&id)))?;
        grids.push(grid);
    }
    write_manifest(dir, &manifest_entries(&grids))
}

/// Partition every slide in `features_dir` and write one graph file per slide.
pub fn build_graph_dir(
    features_dir: &Path,
    n_bar: usize,
    criterion: MergeCriterion,
    out_dir: &Path,
) -> Result<usize> {
    let grids = load_feature_dir(features_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut total = 0;
    for grid in &grids {
        let graphs = build_tissue_graphs(grid, n_bar, criterion)?;
        total += graphs.len();
        save_graphs(
            &out_dir.join(format!("{}.tgf", grid.wsi_id)),
            &grid.wsi_id,
            &graphs,
        )?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub row: MetricsRow,
    pub pr_curve: Vec<(f64, f64)>,
    pub queries: usize,
    pub database: usize,
}

/// Rank the whole index for every non-excluded query graph.
pub fn evaluate(
    index_path: &Path,
    checkpoint: &Path,
    query_dir: &Path,
    n_bar: usize,
    depth: usize,
) -> Result<EvalReport> {
    let index = load_index(index_path)?;
    let params = load_checkpoint(checkpoint)?;
    let queries: Vec<_> = load_graph_dir(query_dir)?
        .into_iter()
        .filter(|g| g.label != GraphLabel::Excluded)
        .collect();
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no labeled query graphs".into()));
    }
    let mut results = Vec::with_capacity(queries.len());
    for q in &queries {
        let code = encode_code(q, &params)?;
        results.push(index.rank_all(&q.graph_id, &code)?);
    }
    let labels: Vec<_> = queries.iter().map(|q| q.label).collect();
    let table = RelevanceTable::from_results(&results, &labels)?;
    let k = depth.min(index.len());
    let row = MetricsRow {
        n_bar,
        ap_at_50: average_precision_at_k(&table, k)?,
        map: mean_average_precision(&table)?,
    };
    Ok(EvalReport {
        row,
        pr_curve: interpolated_pr_curve(&table)?,
        queries: queries.len(),
        database: index.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub metrics: Vec<MetricsRow>,
    /// Stages skipped because their stamps matched.
    pub skipped: Vec<String>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.in_stage(name),
    })
}

/// Run every stage in dependency order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    config.checkpoint_path()?;
    config.index_path()?;
    let mut skipped = Vec::new();
    let splits = [
        ("database", config.database_features()),
        ("query", config.query_features()),
    ];

    // ingest
    if config.synthetic {
        for ((split, dir), count) in splits.iter().zip([config.database_wsis, config.query_wsis]) {
            let mut fp = Fingerprint::new("ingest");
            fp.text(&config.synthetic_spec.to_string())
                .text(&format!("{count}/{}/{split}", config.seed));
            let fp = fp.hex();
            if up_to_date(dir, &fp) {
                skipped.push(format!("ingest/{split}"));
                continue;
            }
            stage(
                "ingest",
                ingest_synthetic(&config.synthetic_spec, count, config.seed, split, dir),
            )?;
            write_stamp(dir, &fp)?;
        }
    } else {
        for (split, dir) in &splits {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "missing {split} feature directory {}",
                    dir.display()
                )));
            }
        }
    }

    let mut metrics = Vec::new();
    for &n_bar in &config.n_bars {
        // graphs
        for (split, features) in &splits {
            let out = config.graph_dir(n_bar, split);
            let mut fp = Fingerprint::new("graphs");
            stage("graphs", fp.dir(features))?;
            fp.text(&format!("{n_bar}/{}", config.merge_criterion));
            let fp = fp.hex();
            if up_to_date(&out, &fp) {
                skipped.push(format!("graphs/n{n_bar}/{split}"));
                continue;
            }
            stage(
                "graphs",
                build_graph_dir(features, n_bar, config.merge_criterion, &out),
            )?;
            write_stamp(&out, &fp)?;
        }
        let db_graphs = config.graph_dir(n_bar, "database");
        let query_graphs = config.graph_dir(n_bar, "query");
        let report_dir = config.report_dir_for(n_bar);

        // train
        let checkpoint = config.checkpoint_for(n_bar)?;
        let mut fp = Fingerprint::new("train");
        stage("train", fp.dir(&db_graphs))?;
        fp.text(&config.train.to_string());
        let fp = fp.hex();
        if up_to_date(&checkpoint, &fp) {
            skipped.push(format!("train/n{n_bar}"));
        } else {
            let graphs = stage("train", load_graph_dir(&db_graphs))?;
            let outcome = stage("train", train(&graphs, &config.train))?;
            stage("train", save_checkpoint(&outcome.params, &checkpoint))?;
            stage(
                "train",
                write_history_csv(&report_dir.join("history.csv"), &outcome.history),
            )?;
            write_stamp(&checkpoint, &fp)?;
        }

        // index
        let index_path = config.index_for(n_bar)?;
        let mut fp = Fingerprint::new("index");
        stage("index", fp.file(&checkpoint))?;
        stage("index", fp.dir(&db_graphs))?;
        let fp = fp.hex();
        if up_to_date(&index_path, &fp) {
            skipped.push(format!("index/n{n_bar}"));
        } else {
            let params = stage("index", load_checkpoint(&checkpoint))?;
            let graphs = stage("index", load_graph_dir(&db_graphs))?;
            let index = stage("index", build_index(&graphs, &params))?;
            stage("index", save_index(&index, &index_path))?;
            write_stamp(&index_path, &fp)?;
        }

        // eval
        let report = stage(
            "eval",
            evaluate(
                &index_path,
                &checkpoint,
                &query_graphs,
                n_bar,
                config.eval_depth,
            ),
        )?;
        stage(
            "eval",
            write_pr_curve_csv(&report_dir.join("pr_curve.csv"), &report.pr_curve),
        )?;
        log::info!(
            "n_bar={n_bar}: {} queries against {} graphs, AP({})={:.4} mAP={:.4}",
            report.queries,
            report.database,
            config.eval_depth,
            report.row.ap_at_50,
            report.row.map
        );
        metrics.push(report.row);
    }
    stage(
        "eval",
        write_metrics_csv(&config.reports_dir.join("metrics.csv"), &metrics),
    )?;
    Ok(PipelineReport { metrics, skipped })
}
