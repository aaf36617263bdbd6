//! Shared fixtures and independent reference implementations.
#![allow(dead_code)]

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tissue_hash::graphcons::{GraphLabel, MergeRecord, Partition, TissueGraph};
use tissue_hash::ingest::{PatchAdjacency, PatchGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Connected random graph: a random spanning tree plus extra edges.
pub fn random_graph(
    id: &str,
    nodes: usize,
    feature_dim: usize,
    label: GraphLabel,
    rng: &mut ChaCha8Rng,
) -> TissueGraph {
    let mut pairs = Vec::new();
    for v in 1..nodes {
        pairs.push((rng.random_range(0..v), v));
    }
    for a in 0..nodes {
        for b in a + 1..nodes {
            if rng.random::<f64>() < 0.25 {
                pairs.push((a, b));
            }
        }
    }
    let mut features = normal_matrix(nodes, feature_dim, rng);
    if label == GraphLabel::Cancerous {
        features.column_mut(0).mapv_inplace(|v| v + 2.0);
    }
    TissueGraph {
        graph_id: id.to_string(),
        wsi_id: "w".to_string(),
        node_features: features,
        adjacency: PatchAdjacency::new(nodes, pairs).unwrap(),
        member_patch_ids: (0..nodes).collect(),
        label,
        tumor_fraction: if label == GraphLabel::Cancerous {
            1.0
        } else {
            0.0
        },
    }
}

/// Relabel nodes: new node `i` is old node `perm[i]`.
pub fn permute_graph(g: &TissueGraph, perm: &[usize]) -> TissueGraph {
    let mut inverse = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let features = Array2::from_shape_fn(g.node_features.dim(), |(i, j)| {
        g.node_features[[perm[i], j]]
    });
    let pairs = g
        .adjacency
        .pairs
        .iter()
        .map(|&(a, b)| (inverse[a], inverse[b]));
    TissueGraph {
        node_features: features,
        adjacency: PatchAdjacency::new(perm.len(), pairs).unwrap(),
        member_patch_ids: perm.iter().map(|&p| g.member_patch_ids[p]).collect(),
        ..g.clone()
    }
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Grid of at most `max_patches` tissue cells scattered over a small window.
pub fn random_small_grid(
    max_patches: usize,
    feature_dim: usize,
    rng: &mut ChaCha8Rng,
) -> PatchGrid {
    let rows = rng.random_range(1..=4);
    let cols = rng.random_range(1..=4);
    let mut cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .collect();
    cells.shuffle(rng);
    let keep = rng.random_range(1..=cells.len().min(max_patches));
    cells.truncate(keep);
    cells.sort_unstable();
    let features = Array2::from_shape_fn((keep, feature_dim), |_| {
        // Coarse values make exact cost ties common.
        rng.random_range(0..3) as f64
    });
    let ratios = (0..keep)
        .map(|_| rng.random_range(0..3) as f64 / 2.0)
        .collect();
    PatchGrid::new("grid", rows, cols, features, cells, ratios).unwrap()
}

/// Within-cluster sum of squared deviations from the centroid.
pub fn reference_ees(grid: &PatchGrid, members: &[usize]) -> f64 {
    let d = grid.features.ncols();
    let k = members.len() as f64;
    let mut centroid = vec![0.0; d];
    for &m in members {
        for (c, v) in centroid.iter_mut().zip(grid.features.row(m)) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= k);
    let mut total = 0.0;
    for &m in members {
        for (c, v) in centroid.iter().zip(grid.features.row(m)) {
            let dv = v - c;
            total += dv * dv;
        }
    }
    total
}

fn lattice_adjacent(grid: &PatchGrid, a: usize, b: usize) -> bool {
    let (ra, ca) = grid.grid_pos[a];
    let (rb, cb) = grid.grid_pos[b];
    ra.abs_diff(rb) + ca.abs_diff(cb) == 1
}

/// Greedy agglomeration executed step by step: every iteration scores every
/// spatially adjacent cluster pair by the EES of their union and merges the
/// cheapest, lowest `(i, j)` first. Stops at `target` or when no adjacent
/// pair is left.
pub fn reference_hac(grid: &PatchGrid, target: usize) -> Partition {
    let mut clusters: Vec<Vec<usize>> = (0..grid.num_patches()).map(|p| vec![p]).collect();
    let mut log = Vec::new();
    while clusters.len() > target {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let touching = clusters[i]
                    .iter()
                    .any(|&a| clusters[j].iter().any(|&b| lattice_adjacent(grid, a, b)));
                if !touching {
                    continue;
                }
                let mut union = clusters[i].clone();
                union.extend(&clusters[j]);
                union.sort_unstable();
                let cost = reference_ees(grid, &union);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, i, j));
                }
            }
        }
        let Some((cost, i, j)) = best else { break };
        log.push(MergeRecord {
            cluster_a: clusters[i][0],
            cluster_b: clusters[j][0],
            cost,
        });
        let moved = clusters.remove(j);
        clusters[i].extend(moved);
        clusters[i].sort_unstable();
    }
    Partition {
        clusters,
        merge_log: log,
    }
}

/// Random tissue mask over a `rows × cols` window with Gaussian features.
pub fn random_grid(
    rows: usize,
    cols: usize,
    density: f64,
    feature_dim: usize,
    rng: &mut ChaCha8Rng,
) -> PatchGrid {
    let mut cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|_| rng.random::<f64>() < density)
        .collect();
    if cells.is_empty() {
        cells.push((rng.random_range(0..rows), rng.random_range(0..cols)));
    }
    let n = cells.len();
    let features = normal_matrix(n, feature_dim, rng);
    let ratios = (0..n).map(|_| rng.random::<f64>()).collect();
    PatchGrid::new("grid", rows, cols, features, cells, ratios).unwrap()
}

/// Connected components of the lattice adjacency, by union–find.
pub fn component_count(adjacency: &PatchAdjacency) -> usize {
    let mut parent: Vec<usize> = (0..adjacency.n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in &adjacency.pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    (0..adjacency.n)
        .filter(|&x| find(&mut parent, x) == x)
        .count()
}
