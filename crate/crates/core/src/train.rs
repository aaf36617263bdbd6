//! Pairwise hash loss, its exact gradient, a finite-difference checker and
//! the mini-batch Adam training loop.

use std::fmt;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backprop::encode_backward;
use crate::binio::write_file;
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::gcn::{encode_graph, ForwardCache, GcnHashParams, Mode, ModelDims, TensorClass};
use crate::graphcons::{GraphLabel, TissueGraph};

/// `c_ij = +1` when graphs `i` and `j` share a label, `−1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseLabels {
    pub c: Array2<f64>,
}

pub fn pairwise_label_matrix(labels: &[GraphLabel]) -> Result<PairwiseLabels> {
    if let Some(i) = labels.iter().position(|&l| l == GraphLabel::Excluded) {
        return Err(Error::InvalidArgument(format!(
            "graph {i} is labeled excluded and cannot be paired"
        )));
    }
    let n = labels.len();
    let c = Array2::from_shape_fn(
        (n, n),
        |(i, j)| {
            if labels[i] == labels[j] {
                1.0
            } else {
                -1.0
            }
        },
    );
    Ok(PairwiseLabels { c })
}

/// `‖W_hᵀ W_h − I‖_F²`
pub fn orthogonality_penalty(hash_w: ArrayView2<'_, f64>) -> f64 {
    let mut g = hash_w.t().dot(&hash_w);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    g.iter().map(|v| v * v).sum()
}

/// `J = (1/N)‖(1/d_h) Y Yᵀ − C‖_F² + λ‖W_hᵀ W_h − I‖_F²`
pub fn hash_loss(
    y: ArrayView2<'_, f64>,
    labels: &PairwiseLabels,
    hash_w: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<f64> {
    let (n, d_h) = y.dim();
    if labels.c.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "label matrix {:?} for {n} codes",
            labels.c.dim()
        )));
    }
    if hash_w.ncols() != d_h {
        return Err(Error::Shape(format!(
            "hash weight has {} columns, codes have {d_h}",
            hash_w.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let residual = y.dot(&y.t()) / d_h as f64 - &labels.c;
    let fit: f64 = residual.iter().map(|v| v * v).sum::<f64>() / n as f64;
    Ok(fit + lambda * orthogonality_penalty(hash_w))
}

/// `∂J/∂Y = (4 / (N d_h)) R Y` with `R = (1/d_h) Y Yᵀ − C`.
pub fn hash_loss_grad_codes(y: ArrayView2<'_, f64>, labels: &PairwiseLabels) -> Array2<f64> {
    let (n, d_h) = y.dim();
    let residual = y.dot(&y.t()) / d_h as f64 - &labels.c;
    residual.dot(&y) * (4.0 / (n as f64 * d_h as f64))
}

/// `∂(λ‖WᵀW − I‖²)/∂W = 4λ W (WᵀW − I)`
pub fn orthogonality_grad(hash_w: ArrayView2<'_, f64>, lambda: f64) -> Array2<f64> {
    let mut g = hash_w.t().dot(&hash_w);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    hash_w.dot(&g) * (4.0 * lambda)
}

fn labels_of(batch: &[&TissueGraph]) -> Vec<GraphLabel> {
    batch.iter().map(|g| g.label).collect()
}

/// Loss of a batch in inference mode (no dropout).
pub fn batch_loss(batch: &[&TissueGraph], params: &GcnHashParams, lambda: f64) -> Result<f64> {
    let labels = pairwise_label_matrix(&labels_of(batch))?;
    let d_h = params.dims.code_bits;
    let mut y = Array2::zeros((batch.len(), d_h));
    for (i, g) in batch.iter().enumerate() {
        let (row, _) = encode_graph(g, params, Mode::Inference)?;
        y.row_mut(i).assign(&row);
    }
    hash_loss(y.view(), &labels, params.hash_w.view(), lambda)
}

/// Loss and exact gradient of one batch.
///
/// With `dropout_rng` set, every graph's forward pass samples fresh dropout
/// masks from it; without it the pass is deterministic.
pub fn loss_gradients(
    batch: &[&TissueGraph],
    params: &GcnHashParams,
    lambda: f64,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, GcnHashParams)> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument(
            "pairwise loss needs at least two graphs".into(),
        ));
    }
    let labels = pairwise_label_matrix(&labels_of(batch))?;
    let d_h = params.dims.code_bits;
    let mut y = Array2::zeros((batch.len(), d_h));
    let mut caches: Vec<ForwardCache> = Vec::with_capacity(batch.len());
    for (i, g) in batch.iter().enumerate() {
        let mode = match dropout_rng.as_deref_mut() {
            Some(rng) => Mode::Train { rng },
            None => Mode::Inference,
        };
        let (row, cache) = encode_graph(g, params, mode)?;
        y.row_mut(i).assign(&row);
        caches.push(cache);
    }
    let loss = hash_loss(y.view(), &labels, params.hash_w.view(), lambda)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    let d_y = hash_loss_grad_codes(y.view(), &labels);
    let mut grads = params.zeros_like();
    for (cache, d_row) in caches.iter().zip(d_y.axis_iter(Axis(0))) {
        encode_backward(params, cache, d_row, &mut grads)?;
    }
    grads.hash_w += &orthogonality_grad(params.hash_w.view(), lambda);
    Ok((loss, grads))
}

/// Outcome of a gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Largest error per tensor class with the parameter that produced it.
    pub worst: Vec<(TensorClass, String, f64)>,
    pub coordinates_checked: usize,
    pub max_abs_gradient: f64,
}

/// Compare analytic gradients with central differences on up to
/// `samples_per_class` random coordinates of every tensor class.
///
/// Relative error is `|analytic − numeric| / max(|numeric|, 1e−8)`.
/// Dropout is always off.
pub fn finite_diff_check(
    params: &GcnHashParams,
    batch: &[&TissueGraph],
    lambda: f64,
    step: f64,
    samples_per_class: usize,
    seed: u64,
) -> Result<GradientCheck> {
    let (_, grads) = loss_gradients(batch, params, lambda, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = [
        TensorClass::Embed,
        TensorClass::Pool,
        TensorClass::HashWeight,
        TensorClass::HashBias,
    ];
    let grad_tensors = grads.tensors();
    let max_abs_gradient = grad_tensors
        .iter()
        .flat_map(|(_, _, t)| t.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = Vec::new();
    let mut checked = 0;
    let mut probe = params.clone();
    for class in classes {
        let coords: Vec<(usize, usize)> = grad_tensors
            .iter()
            .enumerate()
            .filter(|(_, (_, c, _))| *c == class)
            .flat_map(|(ti, (_, _, t))| (0..t.len()).map(move |k| (ti, k)))
            .collect();
        if coords.is_empty() {
            continue;
        }
        let picks: Vec<usize> = if coords.len() <= samples_per_class {
            (0..coords.len()).collect()
        } else {
            let mut v = index::sample(&mut rng, coords.len(), samples_per_class).into_vec();
            v.sort_unstable();
            v
        };
        let mut class_worst = (String::new(), 0.0f64);
        for pick in picks {
            let (ti, k) = coords[pick];
            let original = params.tensors()[ti].2[k];
            set_coord(&mut probe, ti, k, original + step);
            let plus = batch_loss(batch, &probe, lambda)?;
            set_coord(&mut probe, ti, k, original - step);
            let minus = batch_loss(batch, &probe, lambda)?;
            set_coord(&mut probe, ti, k, original);
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grad_tensors[ti].2[k];
            let rel = (analytic - numeric).abs() / numeric.abs().max(1e-8);
            if rel >= class_worst.1 {
                class_worst = (format!("{}[{k}]", grad_tensors[ti].0), rel);
            }
            checked += 1;
        }
        worst.push((class, class_worst.0, class_worst.1));
    }
    let max_relative_error = worst.iter().fold(0.0f64, |m, w| m.max(w.2));
    Ok(GradientCheck {
        max_relative_error,
        worst,
        coordinates_checked: checked,
        max_abs_gradient,
    })
}

fn set_coord(params: &mut GcnHashParams, tensor: usize, coord: usize, value: f64) {
    params.tensors_mut()[tensor].2[coord] = value;
}

// ---------------------------------------------------------------------------
// Optimizer

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: GcnHashParams,
    v: GcnHashParams,
}

impl Adam {
    pub fn new(
        params: &GcnHashParams,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            eps,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut GcnHashParams, grads: &GcnHashParams) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.eps);
        let p_all = params.tensors_mut();
        let m_all = self.m.tensors_mut();
        let v_all = self.v.tensors_mut();
        let g_all = grads.tensors();
        for (((p, m), v), g) in p_all.into_iter().zip(m_all).zip(v_all).zip(g_all) {
            for i in 0..p.2.len() {
                let gi = g.2[i];
                m.2[i] = b1 * m.2[i] + (1.0 - b1) * gi;
                v.2[i] = b2 * v.2[i] + (1.0 - b2) * gi * gi;
                let m_hat = m.2[i] / bc1;
                let v_hat = v.2[i] / bc2;
                p.2[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight of the orthogonality regularizer on `W_h`.
    pub lambda: f64,
    pub seed: u64,
    /// Interleave classes inside each batch instead of plain shuffling.
    pub stratified: bool,
    pub dims: ModelDims,
}

pub const DEFAULT_LAMBDA: f64 = 0.005;

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            epochs: 100,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            stratified: false,
            dims: ModelDims::default(),
        }
    }
}

pub const TRAIN_KEYS: &[&str] = &[
    "preset",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "batch_size",
    "epochs",
    "lambda",
    "seed",
    "stratified",
    "levels",
    "steps",
    "embed_dim",
    "alpha",
    "code_bits",
    "feature_dim",
    "max_nodes",
    "dropout",
    "dropout_on_pool",
];

impl TrainConfig {
    /// Camelyon preset: `d = 100`, `λ = 0.05`.
    pub fn camelyon(feature_dim: usize) -> Self {
        TrainConfig {
            lambda: 0.05,
            dims: ModelDims::camelyon(feature_dim),
            ..TrainConfig::default()
        }
    }

    /// Apply the keys in [`TRAIN_KEYS`] found in `kv` on top of a preset
    /// (`preset = acdc | camelyon`, default acdc).
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut cfg = match kv.get("preset").unwrap_or("acdc") {
            "acdc" => TrainConfig::default(),
            "camelyon" => TrainConfig::camelyon(1024),
            other => return Err(Error::Config(format!("unknown preset `{other}`"))),
        };
        kv.read_into("learning_rate", &mut cfg.learning_rate)?;
        kv.read_into("adam_beta1", &mut cfg.adam_beta1)?;
        kv.read_into("adam_beta2", &mut cfg.adam_beta2)?;
        kv.read_into("adam_eps", &mut cfg.adam_eps)?;
        kv.read_into("batch_size", &mut cfg.batch_size)?;
        kv.read_into("epochs", &mut cfg.epochs)?;
        kv.read_into("lambda", &mut cfg.lambda)?;
        kv.read_into("seed", &mut cfg.seed)?;
        kv.read_into("stratified", &mut cfg.stratified)?;
        let d = &mut cfg.dims;
        kv.read_into("levels", &mut d.levels)?;
        kv.read_into("steps", &mut d.steps)?;
        kv.read_into("embed_dim", &mut d.embed_dim)?;
        kv.read_into("alpha", &mut d.alpha)?;
        kv.read_into("code_bits", &mut d.code_bits)?;
        kv.read_into("feature_dim", &mut d.feature_dim)?;
        kv.read_into("max_nodes", &mut d.max_nodes)?;
        kv.read_into("dropout", &mut d.dropout)?;
        kv.read_into("dropout_on_pool", &mut d.dropout_on_pool)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be >= 2".into()));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.dims;
        writeln!(f, "learning_rate={}", self.learning_rate)?;
        writeln!(f, "adam_beta1={}", self.adam_beta1)?;
        writeln!(f, "adam_beta2={}", self.adam_beta2)?;
        writeln!(f, "adam_eps={}", self.adam_eps)?;
        writeln!(f, "batch_size={}", self.batch_size)?;
        writeln!(f, "epochs={}", self.epochs)?;
        writeln!(f, "lambda={}", self.lambda)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "stratified={}", self.stratified)?;
        writeln!(f, "levels={}", d.levels)?;
        writeln!(f, "steps={}", d.steps)?;
        writeln!(f, "embed_dim={}", d.embed_dim)?;
        writeln!(f, "alpha={}", d.alpha)?;
        writeln!(f, "code_bits={}", d.code_bits)?;
        writeln!(f, "feature_dim={}", d.feature_dim)?;
        writeln!(f, "max_nodes={}", d.max_nodes)?;
        writeln!(f, "dropout={}", d.dropout)?;
        writeln!(f, "dropout_on_pool={}", d.dropout_on_pool)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GcnHashParams,
    /// Mean batch loss per epoch.
    pub history: Vec<f64>,
}

fn epoch_order(graphs: &[&TissueGraph], stratified: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if !stratified {
        let mut order: Vec<usize> = (0..graphs.len()).collect();
        order.shuffle(rng);
        return order;
    }
    let mut pos: Vec<usize> = (0..graphs.len())
        .filter(|&i| graphs[i].label == GraphLabel::Cancerous)
        .collect();
    let mut neg: Vec<usize> = (0..graphs.len())
        .filter(|&i| graphs[i].label != GraphLabel::Cancerous)
        .collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut out = Vec::with_capacity(graphs.len());
    let (mut a, mut b) = (pos.into_iter(), neg.into_iter());
    loop {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => out.extend(x.into_iter().chain(y)),
        }
    }
    out
}

/// Split an epoch order into batches, folding a trailing singleton into the
/// previous batch so every batch has at least one pair.
fn batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let tail = out.pop().unwrap();
        out.last_mut().unwrap().extend(tail);
    }
    out
}

/// Seed for weight initialization derived from the training seed.
pub fn init_seed(seed: u64) -> u64 {
    seed ^ 0x1d8e_4e27_c47d_124f
}

/// Mini-batch Adam over shuffled batches. Excluded graphs are dropped first.
pub fn train(graphs: &[TissueGraph], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let usable: Vec<&TissueGraph> = graphs
        .iter()
        .filter(|g| g.label != GraphLabel::Excluded)
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two labeled graphs, have {}",
            usable.len()
        )));
    }
    if let Some(g) = usable
        .iter()
        .find(|g| g.feature_dim() != config.dims.feature_dim)
    {
        return Err(Error::Shape(format!(
            "graph {} has feature width {}, config expects {}",
            g.graph_id,
            g.feature_dim(),
            config.dims.feature_dim
        )));
    }
    let first = usable[0].label;
    if usable.iter().all(|g| g.label == first) {
        log::warn!("training set holds a single class ({first}); the pairwise loss is degenerate");
    }
    let mut params = GcnHashParams::init(config.dims.clone(), init_seed(config.seed))?;
    let mut adam = Adam::new(
        &params,
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order = epoch_order(&usable, config.stratified, &mut rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for batch_idx in batches(&order, config.batch_size) {
            let batch: Vec<&TissueGraph> = batch_idx.iter().map(|&i| usable[i]).collect();
            let (loss, grads) = match loss_gradients(&batch, &params, config.lambda, Some(&mut rng))
            {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Diverged {
                        epoch,
                        loss: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            adam.step(&mut params, &grads);
            total += loss;
            count += 1;
        }
        let mean = total / count as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        log::debug!("epoch {epoch}: loss {mean:.6}");
        history.push(mean);
    }
    Ok(TrainOutcome { params, history })
}

pub fn write_history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut text = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, l));
    }
    write_file(path, text.as_bytes())
}

/// Codes of a whole set in inference mode, one row per graph.
pub fn encode_all(graphs: &[&TissueGraph], params: &GcnHashParams) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((graphs.len(), params.dims.code_bits));
    for (i, g) in graphs.iter().enumerate() {
        let row: Array1<f64> = encode_graph(g, params, Mode::Inference)?.0;
        y.row_mut(i).assign(&row);
    }
    Ok(y)
}
