//! Reverse-mode gradients of the encoder, driven by a [`ForwardCache`].

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::gcn::{ForwardCache, GcnHashParams, GcnStack, StackCache};

struct StackGrads {
    weights: Vec<Array2<f64>>,
    input: Array2<f64>,
    norm_adj: Array2<f64>,
}

/// Backward through `H ← mask ∘ ReLU(Â H W)` steps.
fn stack_backward(
    cache: &StackCache,
    stack: &GcnStack,
    last_cols: usize,
    norm_adj: &Array2<f64>,
    d_out: Array2<f64>,
) -> StackGrads {
    let steps = stack.weights.len();
    let mut d_weights = vec![Array2::zeros((0, 0)); steps];
    let mut d_norm = Array2::zeros(norm_adj.raw_dim());
    let mut dh = d_out;
    for k in (0..steps).rev() {
        let mut dp = dh;
        if let Some(mask) = &cache.masks[k] {
            dp *= mask;
        }
        dp.zip_mut_with(&cache.pre[k], |g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let w = if k + 1 == steps {
            stack.weights[k].slice(s![.., ..last_cols])
        } else {
            stack.weights[k].view()
        };
        d_weights[k] = cache.propagated[k].t().dot(&dp);
        let dq = dp.dot(&w.t());
        d_norm += &dq.dot(&cache.inputs[k].t());
        dh = norm_adj.t().dot(&dq);
    }
    StackGrads {
        weights: d_weights,
        input: dh,
        norm_adj: d_norm,
    }
}

/// Gradient w.r.t. the raw adjacency given the gradient w.r.t. its
/// normalization `r_i (A + I)_ij r_j`, `r = rowsum(A + I)^{-1/2}`.
fn normalize_backward(
    adjacency: &Array2<f64>,
    inv_sqrt: &Array1<f64>,
    d_norm: &Array2<f64>,
) -> Array2<f64> {
    let n = adjacency.nrows();
    let mut tilde = adjacency.clone();
    for i in 0..n {
        tilde[[i, i]] += 1.0;
    }
    let mut d_r = Array1::<f64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let g = d_norm[[i, j]] * tilde[[i, j]];
            d_r[i] += g * inv_sqrt[j];
            d_r[j] += g * inv_sqrt[i];
        }
    }
    let mut d_a = Array2::zeros((n, n));
    for i in 0..n {
        // r = deg^{-1/2}  ⇒  dr/ddeg = -r³/2
        let d_deg = -0.5 * d_r[i] * inv_sqrt[i].powi(3);
        for j in 0..n {
            d_a[[i, j]] = d_norm[[i, j]] * inv_sqrt[i] * inv_sqrt[j] + d_deg;
        }
    }
    d_a
}

fn add_into(acc: &mut GcnStack, grads: &[Array2<f64>]) {
    for (a, g) in acc.weights.iter_mut().zip(grads) {
        let cols = g.ncols();
        let mut view = a.slice_mut(s![.., ..cols]);
        view += g;
    }
}

/// Accumulate `∂L/∂params` into `grads` given `∂L/∂y` for one forward pass.
pub fn encode_backward(
    params: &GcnHashParams,
    cache: &ForwardCache,
    d_y: ArrayView1<'_, f64>,
    grads: &mut GcnHashParams,
) -> Result<()> {
    let y = &cache.output;
    let d_pre: Array1<f64> = d_y
        .iter()
        .zip(y.iter())
        .map(|(&g, &v)| g * (1.0 - v * v))
        .collect();
    let z = &cache.readout;
    let outer = z
        .view()
        .insert_axis(Axis(1))
        .dot(&d_pre.view().insert_axis(Axis(0)));
    grads.hash_w += &outer;
    grads.hash_b += &d_pre;
    let d_z = params.hash_w.dot(&d_pre);

    let last = cache.levels.last().expect("at least one level");
    let mut d_x = Array2::<f64>::zeros(last.x_next.raw_dim());
    for (c, &r) in cache.argmax.iter().enumerate() {
        d_x[[r, c]] += d_z[c];
    }
    let mut d_a: Option<Array2<f64>> = None;

    for (l, lc) in cache.levels.iter().enumerate().rev() {
        let level = &params.levels[l];
        let s_mat = &lc.assignment;
        let z_mat = &lc.embed.output;
        // X' = Sᵀ Z
        let mut d_s = z_mat.dot(&d_x.t());
        let d_z_mat = s_mat.dot(&d_x);
        let mut d_a_raw = Array2::<f64>::zeros(lc.adjacency.raw_dim());
        // A' = Sᵀ A S
        if let Some(d_a_next) = &d_a {
            let a_s = lc.adjacency.dot(s_mat);
            d_s += &a_s.dot(&d_a_next.t());
            d_s += &lc.adjacency.t().dot(s_mat).dot(d_a_next);
            d_a_raw += &s_mat.dot(d_a_next).dot(&s_mat.t());
        }
        // row softmax
        let mut d_logits = Array2::<f64>::zeros(s_mat.raw_dim());
        for i in 0..s_mat.nrows() {
            let dot: f64 = s_mat.row(i).dot(&d_s.row(i));
            for j in 0..s_mat.ncols() {
                d_logits[[i, j]] = s_mat[[i, j]] * (d_s[[i, j]] - dot);
            }
        }
        let embed = stack_backward(
            &lc.embed,
            &level.embed,
            level.embed.output_dim(),
            &lc.norm_adj,
            d_z_mat,
        );
        let pool = stack_backward(&lc.pool, &level.pool, lc.n_next, &lc.norm_adj, d_logits);
        add_into(&mut grads.levels[l].embed, &embed.weights);
        add_into(&mut grads.levels[l].pool, &pool.weights);
        d_x = embed.input + &pool.input;
        if l > 0 {
            let d_norm = embed.norm_adj + &pool.norm_adj;
            d_a_raw += &normalize_backward(&lc.adjacency, &lc.deg_inv_sqrt, &d_norm);
            d_a = Some(d_a_raw);
        }
    }
    for (name, _, t) in grads.tensors() {
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::normalize_unchecked;
    use ndarray::array;

    #[test]
    fn normalize_backward_matches_finite_differences() {
        let a = array![[0.0, 0.7, 0.2], [0.7, 0.1, 0.4], [0.2, 0.4, 0.0]];
        let weight = array![[0.3, -1.2, 0.5], [0.9, 0.1, -0.4], [-0.6, 0.8, 0.2]];
        let f = |m: &Array2<f64>| (normalize_unchecked(m.view()).0 * &weight).sum();
        let (_, inv) = normalize_unchecked(a.view());
        let analytic = normalize_backward(&a, &inv, &weight);
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut plus = a.clone();
                plus[[i, j]] += h;
                let mut minus = a.clone();
                minus[[i, j]] -= h;
                let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
                assert!((numeric - analytic[[i, j]]).abs() < 1e-8, "({i},{j})");
            }
        }
    }
}
