mod common;

use proptest::prelude::*;
use rand::Rng;

use tissue_hash::eval::{
    interpolated_pr_curve, mean_average_precision, precision_at_k, RelevanceTable,
};
use tissue_hash::graphcons::{
    extract_graphs, hac_partition, hac_partition_naive, is_connected, target_graph_count,
    GraphLabel, MergeCriterion,
};
use tissue_hash::index::{hamming, BinaryCode, BinaryCodeIndex, IndexEntry};
use tissue_hash::ingest::patch_adjacency;
use tissue_hash::train::{hash_loss, pairwise_label_matrix};

use common::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn adjacency_is_a_subset_of_lattice_neighbors(seed: u64, rows in 1usize..12, cols in 1usize..12, density in 0.1f64..1.0) {
        let mut r = rng(seed);
        let grid = random_grid(rows, cols, density, 2, &mut r);
        let adj = patch_adjacency(&grid);
        let n = grid.num_patches();
        let mut degree = vec![0; n];
        for &(a, b) in &adj.pairs {
            prop_assert!(a < b && b < n);
            let (pa, pb) = (grid.grid_pos[a], grid.grid_pos[b]);
            prop_assert_eq!(pa.0.abs_diff(pb.0) + pa.1.abs_diff(pb.1), 1);
            degree[a] += 1;
            degree[b] += 1;
        }
        prop_assert!(degree.iter().all(|&d| d <= 4));
        let dense = adj.to_dense();
        prop_assert_eq!(&dense, &dense.t());
        // Every lattice-adjacent pair of tissue cells is present.
        let expected = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let (pa, pb) = (grid.grid_pos[a], grid.grid_pos[b]);
                pa.0.abs_diff(pb.0) + pa.1.abs_diff(pb.1) == 1
            })
            .count();
        prop_assert_eq!(adj.pairs.len(), expected);
    }

    #[test]
    fn hac_clusters_are_connected_and_cover_the_grid(seed: u64, rows in 1usize..10, cols in 1usize..10, density in 0.2f64..1.0, n_bar in 1usize..12) {
        let mut r = rng(seed);
        let grid = random_grid(rows, cols, density, 3, &mut r);
        let adj = patch_adjacency(&grid);
        let target = target_graph_count(grid.num_patches(), n_bar);
        let p = hac_partition(&grid, &adj, target, MergeCriterion::UnionEes).unwrap();
        prop_assert_eq!(p.clusters.len(), target.max(component_count(&adj)));
        let mut seen: Vec<usize> = p.clusters.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..grid.num_patches()).collect::<Vec<_>>());
        for c in &p.clusters {
            prop_assert!(is_connected(c, &adj));
        }
        prop_assert_eq!(p.merge_log.len(), grid.num_patches() - p.clusters.len());
        let graphs = extract_graphs(&grid, &adj, &p).unwrap();
        prop_assert_eq!(graphs.iter().map(|g| g.num_nodes()).sum::<usize>(), grid.num_patches());
    }

    #[test]
    fn fast_hac_equals_naive_hac(seed: u64, rows in 1usize..8, cols in 1usize..8, density in 0.3f64..1.0, ward: bool) {
        let mut r = rng(seed);
        let grid = random_grid(rows, cols, density, 2, &mut r);
        let adj = patch_adjacency(&grid);
        let target = r.random_range(1..=grid.num_patches());
        let criterion = if ward { MergeCriterion::WardIncrease } else { MergeCriterion::UnionEes };
        let fast = hac_partition(&grid, &adj, target, criterion).unwrap();
        let naive = hac_partition_naive(&grid, &adj, target, criterion).unwrap();
        prop_assert_eq!(fast, naive);
    }

    #[test]
    fn hamming_is_a_metric(seed: u64, bits in 1usize..200) {
        let mut r = rng(seed);
        let [a, b, c] = [0; 3].map(|_| BinaryCode::random(bits, &mut r));
        let (ab, ba, bc, ac) = (
            hamming(&a, &b).unwrap(),
            hamming(&b, &a).unwrap(),
            hamming(&b, &c).unwrap(),
            hamming(&a, &c).unwrap(),
        );
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc);
        prop_assert!(ab as usize <= bits);
        let sq: i32 = a.to_signs().iter().zip(b.to_signs()).map(|(&x, y)| (x as i32 - y as i32).pow(2)).sum();
        prop_assert_eq!(4 * ab as i32, sq);
        prop_assert_eq!(BinaryCode::from_signs(&a.to_signs()), a);
    }

    #[test]
    fn ranking_ignores_insertion_order(seed: u64, n in 1usize..300, k in 1usize..400) {
        let mut r = rng(seed);
        // Short codes force many distance ties.
        let items: Vec<(IndexEntry, BinaryCode)> = (0..n)
            .map(|i| {
                (
                    IndexEntry { graph_id: format!("g{i:04}"), wsi_id: "w".into(), label: GraphLabel::CancerFree },
                    BinaryCode::random(6, &mut r),
                )
            })
            .collect();
        let perm = random_permutation(n, &mut r);
        let a = BinaryCodeIndex::from_entries(6, items.clone()).unwrap();
        let b = BinaryCodeIndex::from_entries(6, perm.iter().map(|&p| items[p].clone())).unwrap();
        let q = BinaryCode::random(6, &mut r);
        let ra = a.query("q", &q, k).unwrap();
        let rb = b.query("q", &q, k).unwrap();
        prop_assert_eq!(&ra, &rb);
        prop_assert_eq!(ra.ranked.len(), k.min(n));
        for w in ra.ranked.windows(2) {
            prop_assert!((w[0].distance, &w[0].graph_id) < (w[1].distance, &w[1].graph_id));
        }
        let full = a.rank_all("q", &q).unwrap();
        prop_assert_eq!(&full.ranked[..ra.ranked.len()], &ra.ranked[..]);
    }

    #[test]
    fn retrieval_metric_invariants(rows in prop::collection::vec(prop::collection::vec(0u8..2, 1..30), 1..8), shift in 0usize..8) {
        let len = rows[0].len();
        let rows: Vec<Vec<u8>> = rows.into_iter().map(|mut r| { r.resize(len, 0); r }).collect();
        prop_assume!(rows.iter().any(|r| r.contains(&1)));
        for row in &rows {
            for k in 1..=len {
                let p = precision_at_k(row, k).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(((p * k as f64) - (p * k as f64).round()).abs() < 1e-9);
            }
        }
        let map = mean_average_precision(&RelevanceTable::new(rows.clone())).unwrap();
        prop_assert!((0.0..=1.0).contains(&map));
        let mut rotated = rows.clone();
        rotated.rotate_left(shift % rows.len());
        let map_rot = mean_average_precision(&RelevanceTable::new(rotated)).unwrap();
        prop_assert!((map - map_rot).abs() < 1e-12);
        let prepended: Vec<Vec<u8>> = rows.iter().map(|r| { let mut v = vec![1]; v.extend(r); v }).collect();
        prop_assert!(mean_average_precision(&RelevanceTable::new(prepended)).unwrap() >= map - 1e-12);
        let curve = interpolated_pr_curve(&RelevanceTable::new(rows)).unwrap();
        prop_assert_eq!(curve.len(), 21);
        for w in curve.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn loss_is_invariant_to_batch_order(seed: u64, n in 2usize..12, d_h in 1usize..16) {
        let mut r = rng(seed);
        let labels: Vec<GraphLabel> = (0..n)
            .map(|_| if r.random::<bool>() { GraphLabel::Cancerous } else { GraphLabel::CancerFree })
            .collect();
        let y = normal_matrix(n, d_h, &mut r).mapv(f64::tanh);
        let w = normal_matrix(d_h + 3, d_h, &mut r);
        let perm = random_permutation(n, &mut r);
        let y_p = ndarray::Array2::from_shape_fn((n, d_h), |(i, j)| y[[perm[i], j]]);
        let labels_p: Vec<GraphLabel> = perm.iter().map(|&p| labels[p]).collect();
        let a = hash_loss(y.view(), &pairwise_label_matrix(&labels).unwrap(), w.view(), 0.1).unwrap();
        let b = hash_loss(y_p.view(), &pairwise_label_matrix(&labels_p).unwrap(), w.view(), 0.1).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(a >= 0.0);
    }
}
