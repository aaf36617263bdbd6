//! Tissue-graph construction.
//!
//! Patches are merged by agglomerative clustering in which only spatially
//! adjacent clusters may merge, so every resulting region is connected. The
//! merge cost of a candidate pair is the error sum of squares of the union
//! (or, optionally, the Ward increase). Each region then becomes a graph whose
//! nodes are its patches and whose edges are the patch 4-adjacencies.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::ingest::{PatchAdjacency, PatchGrid};

/// Fraction above which a region counts as cancerous.
pub const CANCEROUS_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphLabel {
    Cancerous,
    CancerFree,
    Excluded,
}

impl GraphLabel {
    pub fn from_tumor_fraction(fraction: f64) -> Self {
        if fraction > CANCEROUS_THRESHOLD {
            GraphLabel::Cancerous
        } else if fraction == 0.0 {
            GraphLabel::CancerFree
        } else {
            GraphLabel::Excluded
        }
    }

    pub fn to_u8(self) -> u8 {
        match self {
            GraphLabel::CancerFree => 0,
            GraphLabel::Cancerous => 1,
            GraphLabel::Excluded => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(GraphLabel::CancerFree),
            1 => Ok(GraphLabel::Cancerous),
            2 => Ok(GraphLabel::Excluded),
            _ => Err(Error::Format(format!("unknown label code {v}"))),
        }
    }
}

impl fmt::Display for GraphLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphLabel::Cancerous => "cancerous",
            GraphLabel::CancerFree => "cancer-free",
            GraphLabel::Excluded => "excluded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TissueGraph {
    pub graph_id: String,
    pub wsi_id: String,
    pub node_features: Array2<f64>,
    /// Induced patch adjacency, re-indexed to `0..n`.
    pub adjacency: PatchAdjacency,
    pub member_patch_ids: Vec<usize>,
    pub label: GraphLabel,
    pub tumor_fraction: f64,
}

impl TissueGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.ncols()
    }
}

/// One agglomeration step; clusters are named by their smallest patch index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Partition {
    /// Sorted member lists, ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub merge_log: Vec<MergeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeCriterion {
    /// EES of the merged cluster.
    #[default]
    UnionEes,
    /// Increase in total EES caused by the merge (Ward linkage).
    WardIncrease,
}

impl FromStr for MergeCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" | "union_ees" => Ok(MergeCriterion::UnionEes),
            "ward" => Ok(MergeCriterion::WardIncrease),
            _ => Err(Error::Config(format!("unknown merge criterion `{s}`"))),
        }
    }
}

impl fmt::Display for MergeCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeCriterion::UnionEes => "union_ees",
            MergeCriterion::WardIncrease => "ward",
        })
    }
}

/// Error sum of squares: `Σ ‖x_i − mean‖²` over the rows of `features`.
pub fn ees(features: ArrayView2<'_, f64>) -> Result<f64> {
    if features.nrows() == 0 {
        return Err(Error::InvalidArgument("ees of an empty set".into()));
    }
    let idx: Vec<usize> = (0..features.nrows()).collect();
    Ok(ees_of_rows(features, &idx))
}

/// EES over a subset of rows. The result depends only on the order of
/// `rows`, which callers keep sorted so the value is a function of the set.
pub(crate) fn ees_of_rows(features: ArrayView2<'_, f64>, rows: &[usize]) -> f64 {
    let d = features.ncols();
    let mut mean = vec![0.0; d];
    for &r in rows {
        for (m, &v) in mean.iter_mut().zip(features.row(r)) {
            *m += v;
        }
    }
    let k = rows.len() as f64;
    for m in &mut mean {
        *m /= k;
    }
    let mut total = 0.0;
    for &r in rows {
        for (m, &v) in mean.iter().zip(features.row(r)) {
            let dv = v - m;
            total += dv * dv;
        }
    }
    total
}

/// `max(1, round_half_up(m_s / n_bar))`.
pub fn target_graph_count(m_s: usize, n_bar: usize) -> usize {
    assert!(n_bar > 0, "n_bar must be positive");
    ((2 * m_s + n_bar) / (2 * n_bar)).max(1)
}

fn merged(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn merge_cost(
    features: ArrayView2<'_, f64>,
    a: &[usize],
    b: &[usize],
    criterion: MergeCriterion,
) -> f64 {
    let union = ees_of_rows(features, &merged(a, b));
    match criterion {
        MergeCriterion::UnionEes => union,
        MergeCriterion::WardIncrease => union - ees_of_rows(features, a) - ees_of_rows(features, b),
    }
}

fn check_inputs(grid: &PatchGrid, adjacency: &PatchAdjacency, target: usize) -> Result<()> {
    let m = grid.num_patches();
    if m == 0 {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if target == 0 || target > m {
        return Err(Error::InvalidArgument(format!(
            "target {target} must be in 1..={m}"
        )));
    }
    if adjacency.n != m {
        return Err(Error::InvalidArgument(format!(
            "adjacency over {} nodes, grid has {m} patches",
            adjacency.n
        )));
    }
    Ok(())
}

/// Literal agglomeration: every iteration rescans all adjacent cluster pairs
/// and recomputes their costs from full cluster contents.
///
/// Stops at `target` clusters, or earlier when no adjacent pair remains (the
/// connected-component floor). Ties go to the lexicographically smallest
/// `(i, j)` of current cluster positions.
pub fn hac_partition_naive(
    grid: &PatchGrid,
    adjacency: &PatchAdjacency,
    target: usize,
    criterion: MergeCriterion,
) -> Result<Partition> {
    check_inputs(grid, adjacency, target)?;
    let feats = grid.features.view();
    let m = grid.num_patches();
    let mut clusters: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut owner: Vec<usize> = (0..m).collect();
    let mut log = Vec::new();
    while clusters.len() > target {
        let mut candidates = BTreeSet::new();
        for &(p, q) in &adjacency.pairs {
            let (a, b) = (owner[p], owner[q]);
            if a != b {
                candidates.insert((a.min(b), a.max(b)));
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for &(i, j) in &candidates {
            let cost = merge_cost(feats, &clusters[i], &clusters[j], criterion);
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, i, j));
            }
        }
        let Some((cost, p, q)) = best else { break };
        log.push(MergeRecord {
            cluster_a: clusters[p][0],
            cluster_b: clusters[q][0],
            cost,
        });
        let moved = clusters.remove(q);
        clusters[p] = merged(&clusters[p], &moved);
        for (pos, c) in clusters.iter().enumerate() {
            for &x in c {
                owner[x] = pos;
            }
        }
    }
    Ok(Partition {
        clusters,
        merge_log: log,
    })
}

#[derive(Debug, PartialEq)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    gen_a: u32,
    gen_b: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest, then lowest (a, b).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Same result as [`hac_partition_naive`], using a lazily invalidated
/// priority queue so only pairs touching the merged cluster are re-costed.
///
/// Clusters are keyed by their smallest patch. Because a merge always keeps
/// the lower-positioned cluster, ordering by that key equals ordering by
/// position, so the tie-break is unchanged.
pub fn hac_partition(
    grid: &PatchGrid,
    adjacency: &PatchAdjacency,
    target: usize,
    criterion: MergeCriterion,
) -> Result<Partition> {
    check_inputs(grid, adjacency, target)?;
    let feats = grid.features.view();
    let m = grid.num_patches();
    let mut members: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut alive = vec![true; m];
    let mut generation = vec![0u32; m];
    let mut owner: Vec<usize> = (0..m).collect();
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for &(p, q) in &adjacency.pairs {
        nbrs[p].insert(q);
        nbrs[q].insert(p);
    }
    let mut heap = BinaryHeap::new();
    for &(a, b) in &adjacency.pairs {
        heap.push(Candidate {
            cost: merge_cost(feats, &members[a], &members[b], criterion),
            a,
            b,
            gen_a: 0,
            gen_b: 0,
        });
    }
    let mut count = m;
    let mut log = Vec::new();
    while count > target {
        let Some(c) = heap.pop() else { break };
        if !alive[c.a] || !alive[c.b] || generation[c.a] != c.gen_a || generation[c.b] != c.gen_b {
            continue;
        }
        let (p, q) = (c.a, c.b);
        log.push(MergeRecord {
            cluster_a: p,
            cluster_b: q,
            cost: c.cost,
        });
        let moved = std::mem::take(&mut members[q]);
        for &x in &moved {
            owner[x] = p;
        }
        members[p] = merged(&members[p], &moved);
        alive[q] = false;
        generation[p] += 1;
        let q_nbrs = std::mem::take(&mut nbrs[q]);
        for &r in &q_nbrs {
            nbrs[r].remove(&q);
            if r != p {
                nbrs[r].insert(p);
                nbrs[p].insert(r);
            }
        }
        nbrs[p].remove(&q);
        count -= 1;
        for &r in &nbrs[p] {
            let (a, b) = (p.min(r), p.max(r));
            heap.push(Candidate {
                cost: merge_cost(feats, &members[a], &members[b], criterion),
                a,
                b,
                gen_a: generation[a],
                gen_b: generation[b],
            });
        }
    }
    debug_assert!(owner.iter().all(|&o| alive[o]));
    let clusters = (0..m)
        .filter(|&i| alive[i])
        .map(|i| std::mem::take(&mut members[i]))
        .collect();
    Ok(Partition {
        clusters,
        merge_log: log,
    })
}

/// Whether `members` induces a connected subgraph of `adjacency`.
pub fn is_connected(members: &[usize], adjacency: &PatchAdjacency) -> bool {
    if members.is_empty() {
        return false;
    }
    let set: BTreeSet<usize> = members.iter().copied().collect();
    let nb = adjacency.neighbors();
    let mut seen = BTreeSet::from([members[0]]);
    let mut stack = vec![members[0]];
    while let Some(u) = stack.pop() {
        for &v in &nb[u] {
            if set.contains(&v) && seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen.len() == set.len()
}

/// Turn each cluster into a labeled graph.
pub fn extract_graphs(
    grid: &PatchGrid,
    adjacency: &PatchAdjacency,
    partition: &Partition,
) -> Result<Vec<TissueGraph>> {
    let m = grid.num_patches();
    let mismatch = |why: String| Error::InvalidArgument(format!("partition/grid mismatch: {why}"));
    if adjacency.n != m {
        return Err(mismatch(format!("adjacency has {} nodes", adjacency.n)));
    }
    let mut local = vec![usize::MAX; m];
    for (ci, cluster) in partition.clusters.iter().enumerate() {
        if cluster.is_empty() {
            return Err(mismatch(format!("cluster {ci} is empty")));
        }
        for (li, &p) in cluster.iter().enumerate() {
            if p >= m {
                return Err(mismatch(format!("patch {p} out of range")));
            }
            if local[p] != usize::MAX {
                return Err(mismatch(format!("patch {p} in two clusters")));
            }
            local[p] = li;
        }
    }
    if let Some(p) = local.iter().position(|&l| l == usize::MAX) {
        return Err(mismatch(format!("patch {p} not covered")));
    }
    let mut cluster_of = vec![0usize; m];
    for (ci, cluster) in partition.clusters.iter().enumerate() {
        for &p in cluster {
            cluster_of[p] = ci;
        }
    }
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); partition.clusters.len()];
    for &(p, q) in &adjacency.pairs {
        if cluster_of[p] == cluster_of[q] {
            edges[cluster_of[p]].push((local[p], local[q]));
        }
    }
    partition
        .clusters
        .iter()
        .zip(edges)
        .enumerate()
        .map(|(ci, (cluster, pairs))| {
            let n = cluster.len();
            let node_features = grid.features.select(ndarray::Axis(0), cluster);
            let tumor_fraction =
                cluster.iter().map(|&p| grid.tumor_ratio[p]).sum::<f64>() / n as f64;
            Ok(TissueGraph {
                graph_id: format!("{}-g{:03}", grid.wsi_id, ci),
                wsi_id: grid.wsi_id.clone(),
                node_features,
                adjacency: PatchAdjacency::new(n, pairs)?,
                member_patch_ids: cluster.clone(),
                label: GraphLabel::from_tumor_fraction(tumor_fraction),
                tumor_fraction,
            })
        })
        .collect()
}

/// Adjacency, target count, partition and extraction for one slide.
pub fn build_tissue_graphs(
    grid: &PatchGrid,
    n_bar: usize,
    criterion: MergeCriterion,
) -> Result<Vec<TissueGraph>> {
    if n_bar == 0 {
        return Err(Error::InvalidArgument("n_bar must be positive".into()));
    }
    let adjacency = crate::ingest::patch_adjacency(grid);
    let target = target_graph_count(grid.num_patches(), n_bar);
    let partition = hac_partition(grid, &adjacency, target, criterion)?;
    extract_graphs(grid, &adjacency, &partition)
}

// ---------------------------------------------------------------------------
// Graph container files

pub const GRAPH_MAGIC: &[u8; 4] = b"TGF1";

/// Layout: magic, wsi_id, u32 count, then per graph: graph_id, u8 label,
/// f64 tumor_fraction, u32 n, u32 d_f, n·d_f f32 features, u32 edge count,
/// edge pairs as u32, n u32 member ids. Strings are u32-length-prefixed.
pub fn encode_graphs(wsi_id: &str, graphs: &[TissueGraph]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(GRAPH_MAGIC);
    w.str(wsi_id);
    w.u32(graphs.len() as u32);
    for g in graphs {
        w.str(&g.graph_id);
        w.u8(g.label.to_u8());
        w.f64(g.tumor_fraction);
        w.u32(g.num_nodes() as u32);
        w.u32(g.feature_dim() as u32);
        for &v in g.node_features.iter() {
            w.f32(v as f32);
        }
        w.u32(g.adjacency.pairs.len() as u32);
        for &(a, b) in &g.adjacency.pairs {
            w.u32(a as u32);
            w.u32(b as u32);
        }
        for &p in &g.member_patch_ids {
            w.u32(p as u32);
        }
    }
    w.buf
}

pub fn decode_graphs(data: &[u8]) -> Result<Vec<TissueGraph>> {
    let mut r = Reader::new(data, "graph file");
    if r.take(4)? != GRAPH_MAGIC {
        return Err(Error::Format("graph file: bad magic".into()));
    }
    let wsi_id = r.str()?;
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let graph_id = r.str()?;
        let label = GraphLabel::from_u8(r.u8()?)?;
        let tumor_fraction = r.f64()?;
        let n = r.u32()? as usize;
        let d_f = r.u32()? as usize;
        if n == 0 {
            return Err(Error::Format(format!("graph {graph_id} has no nodes")));
        }
        let mut feats = Vec::with_capacity(n * d_f);
        for _ in 0..n * d_f {
            feats.push(r.f32()? as f64);
        }
        let node_features =
            Array2::from_shape_vec((n, d_f), feats).map_err(|e| Error::Format(e.to_string()))?;
        let edges = r.u32()? as usize;
        let mut pairs = Vec::with_capacity(edges);
        for _ in 0..edges {
            pairs.push((r.u32()? as usize, r.u32()? as usize));
        }
        let mut members = Vec::with_capacity(n);
        for _ in 0..n {
            members.push(r.u32()? as usize);
        }
        out.push(TissueGraph {
            graph_id,
            wsi_id: wsi_id.clone(),
            node_features,
            adjacency: PatchAdjacency::new(n, pairs).map_err(|e| Error::Format(e.to_string()))?,
            member_patch_ids: members,
            label,
            tumor_fraction,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "graph file: {} trailing bytes",
            r.remaining()
        )));
    }
    Ok(out)
}

pub fn save_graphs(path: &Path, wsi_id: &str, graphs: &[TissueGraph]) -> Result<()> {
    write_file(path, &encode_graphs(wsi_id, graphs))
}

pub fn load_graphs(path: &Path) -> Result<Vec<TissueGraph>> {
    decode_graphs(&read_file(path)?)
}

/// All `*.tgf` files in a directory, sorted by file name, concatenated.
pub fn load_graph_dir(dir: &Path) -> Result<Vec<TissueGraph>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tgf"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(load_graphs(&f)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::patch_adjacency;
    use ndarray::array;

    fn strip(values: &[f64]) -> PatchGrid {
        let n = values.len();
        let feats = Array2::from_shape_vec((n, 1), values.to_vec()).unwrap();
        let pos = (0..n).map(|c| (0, c)).collect();
        PatchGrid::new("strip", 1, n, feats, pos, vec![0.0; n]).unwrap()
    }

    #[test]
    fn ees_examples() {
        assert_eq!(ees(array![[3.0, 4.0]].view()).unwrap(), 0.0);
        assert_eq!(ees(array![[1.0, 2.0], [1.0, 2.0]].view()).unwrap(), 0.0);
        assert_eq!(ees(array![[0.0, 0.0], [2.0, 0.0]].view()).unwrap(), 2.0);
        assert!(ees(Array2::<f64>::zeros((0, 2)).view()).is_err());
    }

    #[test]
    fn target_count_rounding() {
        assert_eq!(target_graph_count(100, 50), 2);
        assert_eq!(target_graph_count(10, 100), 1);
        assert_eq!(target_graph_count(125, 50), 3);
        assert_eq!(target_graph_count(124, 50), 2);
    }

    #[test]
    fn identical_features_merge_at_zero_cost() {
        let pos = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let g = PatchGrid::new("s", 2, 2, Array2::ones((4, 3)), pos, vec![0.0; 4]).unwrap();
        let adj = patch_adjacency(&g);
        let p = hac_partition(&g, &adj, 1, MergeCriterion::UnionEes).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1, 2, 3]]);
        assert_eq!(p.merge_log.len(), 3);
        assert!(p.merge_log.iter().all(|m| m.cost == 0.0));
    }

    #[test]
    fn strip_splits_at_feature_jump() {
        let g = strip(&[0.0, 0.0, 10.0, 10.0]);
        let adj = patch_adjacency(&g);
        for criterion in [MergeCriterion::UnionEes, MergeCriterion::WardIncrease] {
            let p = hac_partition(&g, &adj, 2, criterion).unwrap();
            assert_eq!(p.clusters, vec![vec![0, 1], vec![2, 3]]);
        }
    }

    #[test]
    fn disconnected_components_set_the_floor() {
        let feats = Array2::zeros((4, 2));
        let pos = vec![(0, 0), (0, 1), (0, 3), (0, 4)];
        let g = PatchGrid::new("s", 1, 5, feats, pos, vec![0.0; 4]).unwrap();
        let adj = patch_adjacency(&g);
        let naive = hac_partition_naive(&g, &adj, 1, MergeCriterion::UnionEes).unwrap();
        let fast = hac_partition(&g, &adj, 1, MergeCriterion::UnionEes).unwrap();
        assert_eq!(naive.clusters, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(naive, fast);
    }

    #[test]
    fn partition_argument_errors() {
        let g = strip(&[0.0, 1.0]);
        let adj = patch_adjacency(&g);
        assert!(hac_partition(&g, &adj, 3, MergeCriterion::UnionEes).is_err());
        assert!(hac_partition(&g, &adj, 0, MergeCriterion::UnionEes).is_err());
    }

    #[test]
    fn labels_from_fractions() {
        let pos = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let g = PatchGrid::new(
            "w",
            2,
            2,
            Array2::zeros((4, 1)),
            pos,
            vec![0.2, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let adj = patch_adjacency(&g);
        let whole = Partition {
            clusters: vec![vec![0, 1, 2, 3]],
            merge_log: vec![],
        };
        let gs = extract_graphs(&g, &adj, &whole).unwrap();
        assert!((gs[0].tumor_fraction - 0.05).abs() < 1e-15);
        assert_eq!(gs[0].label, GraphLabel::Excluded);
        assert_eq!(gs[0].adjacency.pairs.len(), 4);

        let singles = Partition {
            clusters: vec![vec![0], vec![1], vec![2], vec![3]],
            merge_log: vec![],
        };
        let gs = extract_graphs(&g, &adj, &singles).unwrap();
        assert_eq!(gs[1].num_nodes(), 1);
        assert!(gs[1].adjacency.pairs.is_empty());
        assert_eq!(gs[1].label, GraphLabel::CancerFree);
        assert_eq!(gs[0].label, GraphLabel::Cancerous);

        let mut g2 = g.clone();
        g2.tumor_ratio = vec![1.0, 1.0, 0.0, 0.0];
        let gs = extract_graphs(&g2, &adj, &whole).unwrap();
        assert_eq!(gs[0].tumor_fraction, 0.5);
        assert_eq!(gs[0].label, GraphLabel::Cancerous);

        let bad = Partition {
            clusters: vec![vec![0, 1], vec![1, 2, 3]],
            merge_log: vec![],
        };
        assert!(extract_graphs(&g, &adj, &bad).is_err());
    }

    #[test]
    fn threshold_boundary_is_exclusive() {
        assert_eq!(GraphLabel::from_tumor_fraction(0.10), GraphLabel::Excluded);
        assert_eq!(
            GraphLabel::from_tumor_fraction(0.1000001),
            GraphLabel::Cancerous
        );
        assert_eq!(GraphLabel::from_tumor_fraction(0.0), GraphLabel::CancerFree);
    }
}
