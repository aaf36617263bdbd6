//! Hierarchical GCN encoder with a tanh hash head.
//!
//! Every level runs two graph-convolution stacks on the same input: an
//! embedding stack producing node features `Z` and a pooling stack whose
//! row-softmax is the soft assignment `S`. The level output is the coarsened
//! graph `(Sᵀ Z, Sᵀ A S)`. After the last level the node features are
//! max-pooled per column and projected by `tanh(z W_h + b_h)`.
//!
//! All forward routines record what the backward pass in [`crate::backprop`]
//! needs in a [`ForwardCache`].

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::graphcons::TissueGraph;

/// Number of clusters after pooling `n` nodes at ratio `alpha`:
/// `max(1, ceil(alpha * n))`.
pub fn cluster_count(n: usize, alpha: f64) -> usize {
    // The epsilon absorbs representation error in products like 0.2 * 15.
    ((alpha * n as f64 - 1e-9).ceil() as usize).max(1)
}

/// Architecture and regularization settings stored with every checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDims {
    /// Number of pooling levels `L`.
    pub levels: usize,
    /// Convolution steps per stack `K`.
    pub steps: usize,
    /// Embedding width `d`.
    pub embed_dim: usize,
    /// Node reduction ratio `α`.
    pub alpha: f64,
    /// Code length `d_h`.
    pub code_bits: usize,
    /// Input feature width `d_f`.
    pub feature_dim: usize,
    /// Largest graph the pooling stacks are sized for.
    pub max_nodes: usize,
    pub dropout: f64,
    pub dropout_on_pool: bool,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims::acdc(1024)
    }
}

impl ModelDims {
    /// `(L, K, d, α, d_h) = (2, 4, 110, 0.2, 48)`.
    pub fn acdc(feature_dim: usize) -> Self {
        ModelDims {
            levels: 2,
            steps: 4,
            embed_dim: 110,
            alpha: 0.2,
            code_bits: 48,
            feature_dim,
            max_nodes: 1024,
            dropout: 0.5,
            dropout_on_pool: true,
        }
    }

    /// `(L, K, d, α, d_h) = (2, 4, 100, 0.2, 48)`.
    pub fn camelyon(feature_dim: usize) -> Self {
        ModelDims {
            embed_dim: 100,
            ..ModelDims::acdc(feature_dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.levels == 0 || self.steps == 0 {
            return bad("levels and steps must be >= 1".into());
        }
        if self.embed_dim == 0 || self.code_bits == 0 || self.feature_dim == 0 {
            return bad("embed_dim, code_bits and feature_dim must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0,1], got {}", self.alpha));
        }
        if self.max_nodes == 0 {
            return bad("max_nodes must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0,1), got {}", self.dropout));
        }
        Ok(())
    }

    /// Width of each level's pooling stack.
    pub fn pool_widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.levels);
        let mut n = self.max_nodes;
        for _ in 0..self.levels {
            n = cluster_count(n, self.alpha);
            widths.push(n);
        }
        widths
    }

    /// Node counts per level for a graph of `n` nodes: `[n, n_1, …, n_L]`.
    pub fn node_schedule(&self, n: usize) -> Vec<usize> {
        let mut out = vec![n];
        for _ in 0..self.levels {
            let last = *out.last().unwrap();
            out.push(cluster_count(last, self.alpha));
        }
        out
    }
}

/// A chain of graph-convolution weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnStack {
    pub weights: Vec<Array2<f64>>,
}

impl GcnStack {
    pub fn new(weights: Vec<Array2<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("stack needs at least one weight".into()));
        }
        for (k, pair) in weights.windows(2).enumerate() {
            if pair[0].ncols() != pair[1].nrows() {
                return Err(Error::Shape(format!(
                    "weight {k} has {} columns but weight {} has {} rows",
                    pair[0].ncols(),
                    k + 1,
                    pair[1].nrows()
                )));
            }
        }
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("stack weights".into()));
        }
        Ok(GcnStack { weights })
    }

    /// Glorot-uniform weights: `d_in → hidden`, then `hidden → hidden`, the
    /// last one `→ d_out`.
    pub fn glorot(
        d_in: usize,
        hidden: usize,
        d_out: usize,
        steps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let weights = (0..steps)
            .map(|k| {
                let rows = if k == 0 { d_in } else { hidden };
                let cols = if k + 1 == steps { d_out } else { hidden };
                glorot_uniform(rows, cols, rng)
            })
            .collect();
        GcnStack { weights }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().ncols()
    }

    fn zeros_like(&self) -> Self {
        GcnStack {
            weights: self
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
        }
    }
}

pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..=limit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolLevel {
    pub embed: GcnStack,
    pub pool: GcnStack,
}

/// Which tensor family a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorClass {
    Embed,
    Pool,
    HashWeight,
    HashBias,
}

/// Every trainable weight of the encoder. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnHashParams {
    pub dims: ModelDims,
    pub levels: Vec<PoolLevel>,
    /// `d × d_h`
    pub hash_w: Array2<f64>,
    pub hash_b: Array1<f64>,
}

impl GcnHashParams {
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = dims.embed_dim;
        let levels = dims
            .pool_widths()
            .into_iter()
            .enumerate()
            .map(|(l, width)| {
                let d_in = if l == 0 { dims.feature_dim } else { d };
                let embed = GcnStack::glorot(d_in, d, d, dims.steps, &mut rng);
                let pool = GcnStack::glorot(d_in, d, width, dims.steps, &mut rng);
                PoolLevel { embed, pool }
            })
            .collect();
        let hash_w = glorot_uniform(d, dims.code_bits, &mut rng);
        let hash_b = Array1::zeros(dims.code_bits);
        Ok(GcnHashParams {
            dims,
            levels,
            hash_w,
            hash_b,
        })
    }

    pub fn zeros_like(&self) -> Self {
        GcnHashParams {
            dims: self.dims.clone(),
            levels: self
                .levels
                .iter()
                .map(|l| PoolLevel {
                    embed: l.embed.zeros_like(),
                    pool: l.pool.zeros_like(),
                })
                .collect(),
            hash_w: Array2::zeros(self.hash_w.raw_dim()),
            hash_b: Array1::zeros(self.hash_b.len()),
        }
    }

    /// Check that every tensor has the shape implied by `dims`.
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let reference = GcnHashParams::init(self.dims.clone(), 0)?;
        let ours = self.tensors();
        let theirs = reference.tensors();
        if ours.len() != theirs.len() {
            return Err(Error::Shape("tensor count does not match dims".into()));
        }
        for ((name, _, a), (_, _, b)) in ours.iter().zip(&theirs) {
            if a.len() != b.len() {
                return Err(Error::Shape(format!(
                    "{name}: {} values, expected {}",
                    a.len(),
                    b.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.clone()));
            }
        }
        Ok(())
    }

    /// Flat views of all tensors in declaration order.
    pub fn tensors(&self) -> Vec<(String, TensorClass, &[f64])> {
        let mut out = Vec::new();
        for (l, level) in self.levels.iter().enumerate() {
            for (k, w) in level.embed.weights.iter().enumerate() {
                out.push((
                    format!("level{l}.embed.w{k}"),
                    TensorClass::Embed,
                    w.as_slice().unwrap(),
                ));
            }
            for (k, w) in level.pool.weights.iter().enumerate() {
                out.push((
                    format!("level{l}.pool.w{k}"),
                    TensorClass::Pool,
                    w.as_slice().unwrap(),
                ));
            }
        }
        out.push((
            "hash_w".into(),
            TensorClass::HashWeight,
            self.hash_w.as_slice().unwrap(),
        ));
        out.push((
            "hash_b".into(),
            TensorClass::HashBias,
            self.hash_b.as_slice().unwrap(),
        ));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, TensorClass, &mut [f64])> {
        let mut out = Vec::new();
        for (l, level) in self.levels.iter_mut().enumerate() {
            for (k, w) in level.embed.weights.iter_mut().enumerate() {
                out.push((
                    format!("level{l}.embed.w{k}"),
                    TensorClass::Embed,
                    w.as_slice_mut().unwrap(),
                ));
            }
            for (k, w) in level.pool.weights.iter_mut().enumerate() {
                out.push((
                    format!("level{l}.pool.w{k}"),
                    TensorClass::Pool,
                    w.as_slice_mut().unwrap(),
                ));
            }
        }
        out.push((
            "hash_w".into(),
            TensorClass::HashWeight,
            self.hash_w.as_slice_mut().unwrap(),
        ));
        out.push((
            "hash_b".into(),
            TensorClass::HashBias,
            self.hash_b.as_slice_mut().unwrap(),
        ));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, _, t)| t.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &GcnHashParams, scale: f64) {
        for ((_, _, a), (_, _, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Forward pieces

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` for a square, symmetric, non-negative matrix.
pub fn normalize_adjacency(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("adjacency is {}x{}", n, a.ncols())));
    }
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..n {
            let v = a[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "adjacency entry ({i},{j}) = {v} is not a finite non-negative value"
                )));
            }
            if (v - a[[j, i]]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "adjacency is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(normalize_unchecked(a).0)
}

/// Returns the normalized matrix and `D̃^{-1/2}`.
pub(crate) fn normalize_unchecked(a: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
    let n = a.nrows();
    let mut tilde = a.to_owned();
    for i in 0..n {
        tilde[[i, i]] += 1.0;
    }
    let inv_sqrt: Array1<f64> = tilde.sum_axis(Axis(1)).mapv(|d| 1.0 / d.sqrt());
    for i in 0..n {
        for j in 0..n {
            tilde[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    (tilde, inv_sqrt)
}

/// Inverted dropout applied after every ReLU while training.
pub struct Dropout<'a> {
    pub probability: f64,
    pub rng: &'a mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn mask(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        let keep = 1.0 / (1.0 - self.probability);
        let p = self.probability;
        Array2::from_shape_fn((rows, cols), |_| {
            if self.rng.random::<f64>() < p {
                0.0
            } else {
                keep
            }
        })
    }
}

/// Intermediate values of one convolution stack.
#[derive(Debug, Clone, PartialEq)]
pub struct StackCache {
    /// `H^(k-1)` for each step.
    pub inputs: Vec<Array2<f64>>,
    /// `Â H^(k-1)` for each step.
    pub propagated: Vec<Array2<f64>>,
    /// Pre-activation `Â H^(k-1) W^(k)`.
    pub pre: Vec<Array2<f64>>,
    pub masks: Vec<Option<Array2<f64>>>,
    pub output: Array2<f64>,
}

fn check_finite(m: &Array2<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn stack_forward(
    norm_adj: &Array2<f64>,
    x: &Array2<f64>,
    weights: &[ArrayView2<'_, f64>],
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<StackCache> {
    if x.nrows() != norm_adj.nrows() || norm_adj.nrows() != norm_adj.ncols() {
        return Err(Error::Shape(format!(
            "adjacency {:?} vs features {:?}",
            norm_adj.dim(),
            x.dim()
        )));
    }
    if x.ncols() != weights[0].nrows() {
        return Err(Error::Shape(format!(
            "features have {} columns, first weight expects {}",
            x.ncols(),
            weights[0].nrows()
        )));
    }
    let mut cache = StackCache {
        inputs: Vec::with_capacity(weights.len()),
        propagated: Vec::with_capacity(weights.len()),
        pre: Vec::with_capacity(weights.len()),
        masks: Vec::with_capacity(weights.len()),
        output: Array2::zeros((0, 0)),
    };
    let mut h = x.clone();
    for w in weights {
        let q = norm_adj.dot(&h);
        let p = q.dot(w);
        check_finite(&p, "graph convolution output")?;
        let mut next = p.mapv(|v| v.max(0.0));
        let mask = dropout
            .as_deref_mut()
            .map(|d| d.mask(next.nrows(), next.ncols()));
        if let Some(m) = &mask {
            next *= m;
        }
        cache.inputs.push(h);
        cache.propagated.push(q);
        cache.pre.push(p);
        cache.masks.push(mask);
        h = next;
    }
    cache.output = h;
    Ok(cache)
}

/// `K` steps of `H ← ReLU(Â H W^(k))` starting from `H = x`.
pub fn gcn_forward(
    norm_adj: &Array2<f64>,
    x: &Array2<f64>,
    stack: &GcnStack,
    dropout: Option<&mut Dropout<'_>>,
) -> Result<(Array2<f64>, StackCache)> {
    let views: Vec<_> = stack.weights.iter().map(|w| w.view()).collect();
    let cache = stack_forward(norm_adj, x, &views, dropout)?;
    Ok((cache.output.clone(), cache))
}

pub(crate) fn row_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Everything one pooling level computed.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCache {
    /// Raw adjacency `A^(l)` fed into this level.
    pub adjacency: Array2<f64>,
    pub norm_adj: Array2<f64>,
    pub deg_inv_sqrt: Array1<f64>,
    pub embed: StackCache,
    pub pool: StackCache,
    /// Number of clusters this level pools into.
    pub n_next: usize,
    /// Truncated pool logits before softmax.
    pub logits: Array2<f64>,
    pub assignment: Array2<f64>,
    pub x_next: Array2<f64>,
    pub a_next: Array2<f64>,
}

pub(crate) fn level_forward(
    adjacency: Array2<f64>,
    x: &Array2<f64>,
    level: &PoolLevel,
    n_next: usize,
    mut dropout: Option<&mut Dropout<'_>>,
    dropout_on_pool: bool,
) -> Result<LevelCache> {
    let n = adjacency.nrows();
    if n_next == 0 || n_next > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pool {n} nodes into {n_next} clusters"
        )));
    }
    let width = level.pool.output_dim();
    if n_next > width {
        return Err(Error::InvalidArgument(format!(
            "{n_next} clusters exceed pool width {width}; graph larger than max_nodes"
        )));
    }
    let (norm_adj, deg_inv_sqrt) = normalize_unchecked(adjacency.view());
    let embed_w: Vec<_> = level.embed.weights.iter().map(|w| w.view()).collect();
    let embed = stack_forward(&norm_adj, x, &embed_w, dropout.as_deref_mut())?;
    let last = level.pool.weights.len() - 1;
    let pool_w: Vec<_> = level
        .pool
        .weights
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if k == last {
                w.slice(s![.., ..n_next])
            } else {
                w.view()
            }
        })
        .collect();
    let pool_dropout = if dropout_on_pool { dropout } else { None };
    let pool = stack_forward(&norm_adj, x, &pool_w, pool_dropout)?;
    let logits = pool.output.clone();
    let assignment = row_softmax(&logits);
    let x_next = assignment.t().dot(&embed.output);
    let a_next = assignment.t().dot(&adjacency).dot(&assignment);
    check_finite(&x_next, "pooled features")?;
    check_finite(&a_next, "pooled adjacency")?;
    Ok(LevelCache {
        adjacency,
        norm_adj,
        deg_inv_sqrt,
        embed,
        pool,
        n_next,
        logits,
        assignment,
        x_next,
        a_next,
    })
}

/// One DiffPool step: returns `(Sᵀ Z, Sᵀ A S, S)`.
pub fn diffpool(
    adjacency: &Array2<f64>,
    x: &Array2<f64>,
    level: &PoolLevel,
    n_next: usize,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let c = level_forward(adjacency.clone(), x, level, n_next, None, false)?;
    Ok((c.x_next, c.a_next, c.assignment))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub levels: Vec<LevelCache>,
    /// Graph representation `z` (column max of the last pooled features).
    pub readout: Array1<f64>,
    /// Row that supplied each column maximum.
    pub argmax: Vec<usize>,
    /// `z W_h + b_h`
    pub pre_tanh: Array1<f64>,
    pub output: Array1<f64>,
}

impl ForwardCache {
    pub fn final_features(&self) -> &Array2<f64> {
        &self.levels.last().unwrap().x_next
    }
}

pub enum Mode<'a> {
    Inference,
    Train { rng: &'a mut ChaCha8Rng },
}

/// Encode a dense `(A, X)` pair into `y ∈ (−1, 1)^{d_h}`.
pub fn encode_dense(
    adjacency: Array2<f64>,
    features: &Array2<f64>,
    params: &GcnHashParams,
    mode: Mode<'_>,
) -> Result<(Array1<f64>, ForwardCache)> {
    let dims = &params.dims;
    let n = features.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no nodes".into()));
    }
    if features.ncols() != dims.feature_dim {
        return Err(Error::Shape(format!(
            "graph features have width {}, model expects {}",
            features.ncols(),
            dims.feature_dim
        )));
    }
    if adjacency.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "adjacency {:?} for {n} nodes",
            adjacency.dim()
        )));
    }
    let mut dropout = match mode {
        Mode::Train { rng } if dims.dropout > 0.0 => Some(Dropout {
            probability: dims.dropout,
            rng,
        }),
        _ => None,
    };
    let schedule = dims.node_schedule(n);
    let mut levels = Vec::with_capacity(dims.levels);
    let mut a = adjacency;
    let mut x = features.clone();
    for (l, level) in params.levels.iter().enumerate() {
        let cache = level_forward(
            a,
            &x,
            level,
            schedule[l + 1],
            dropout.as_mut(),
            dims.dropout_on_pool,
        )?;
        a = cache.a_next.clone();
        x = cache.x_next.clone();
        levels.push(cache);
    }
    let d = x.ncols();
    let mut readout = Array1::zeros(d);
    let mut argmax = vec![0usize; d];
    for c in 0..d {
        let col = x.column(c);
        let mut best = 0;
        for r in 1..col.len() {
            if col[r] > col[best] {
                best = r;
            }
        }
        argmax[c] = best;
        readout[c] = col[best];
    }
    let pre_tanh = readout.dot(&params.hash_w) + &params.hash_b;
    let output = pre_tanh.mapv(f64::tanh);
    if output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hash output".into()));
    }
    let cache = ForwardCache {
        levels,
        readout,
        argmax,
        pre_tanh,
        output: output.clone(),
    };
    Ok((output, cache))
}

pub fn encode_graph(
    graph: &TissueGraph,
    params: &GcnHashParams,
    mode: Mode<'_>,
) -> Result<(Array1<f64>, ForwardCache)> {
    encode_dense(
        graph.adjacency.to_dense(),
        &graph.node_features,
        params,
        mode,
    )
}

/// Inference-mode `y` only.
pub fn embed_graph(graph: &TissueGraph, params: &GcnHashParams) -> Result<Array1<f64>> {
    Ok(encode_graph(graph, params, Mode::Inference)?.0)
}

/// Componentwise sign with `sign(0) = +1`.
pub fn binarize(y: ArrayView1<'_, f64>) -> Result<Vec<i8>> {
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            if !v.is_finite() {
                Err(Error::NonFinite(format!("code component {i}")))
            } else if v >= 0.0 {
                Ok(1)
            } else {
                Ok(-1)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Checkpoints

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GHCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned header with the dims, then every tensor in declaration order as
/// f64 little-endian, then a CRC32 of all preceding bytes.
pub fn encode_checkpoint(params: &GcnHashParams) -> Vec<u8> {
    let d = &params.dims;
    let mut w = Writer::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u32(d.levels as u32);
    w.u32(d.steps as u32);
    w.u32(d.embed_dim as u32);
    w.f64(d.alpha);
    w.u32(d.code_bits as u32);
    w.u32(d.feature_dim as u32);
    w.u32(d.max_nodes as u32);
    w.f64(d.dropout);
    w.u8(d.dropout_on_pool as u8);
    for (_, _, t) in params.tensors() {
        for &v in t {
            w.f64(v);
        }
    }
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

pub fn decode_checkpoint(data: &[u8]) -> Result<GcnHashParams> {
    if data.len() < 8 {
        return Err(Error::Format("checkpoint: truncated".into()));
    }
    let (body, tail) = data.split_at(data.len() - 4);
    let mut r = Reader::new(body, "checkpoint");
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("checkpoint: bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint: unsupported version {version}"
        )));
    }
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Format("checkpoint: checksum mismatch".into()));
    }
    let dims = ModelDims {
        levels: r.u32()? as usize,
        steps: r.u32()? as usize,
        embed_dim: r.u32()? as usize,
        alpha: r.f64()?,
        code_bits: r.u32()? as usize,
        feature_dim: r.u32()? as usize,
        max_nodes: r.u32()? as usize,
        dropout: r.f64()?,
        dropout_on_pool: r.u8()? != 0,
    };
    let mut params = GcnHashParams::init(dims, 0).map_err(|e| Error::Format(e.to_string()))?;
    for (_, _, t) in params.tensors_mut() {
        for v in t.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.remaining() != 0 {
        return Err(Error::Format("checkpoint: trailing bytes".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &GcnHashParams, path: &std::path::Path) -> Result<()> {
    write_file(path, &encode_checkpoint(params))
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<GcnHashParams> {
    decode_checkpoint(&read_file(path)?)
}
