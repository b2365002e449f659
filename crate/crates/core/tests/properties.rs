use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trevhc::comparisons::{
    restrict_triplets, sample_triplets_uniform, triplets_from_similarity, triplets_from_tree,
};
use trevhc::evaluation::{cut_top, Partition};
use trevhc::objective::{consistency_count, latent_trev_closed_form};
use trevhc::oracle::{brute_force_max_trev, enumerate_trees};
use trevhc::{
    adds3, adds3_average_linkage, ari, average_linkage, drev, trev, Dendrogram, SimilarityMatrix,
    Triplet,
};

fn tree(n: usize, seed: u64) -> Dendrogram {
    Dendrogram::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lca_sizes_are_ultrametric(n in 3usize..30, seed: u64) {
        let lca = tree(n, seed).lca_sizes();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // of the three pairwise LCA sizes the two largest coincide
                    let mut v = [lca.get(i, j), lca.get(j, k), lca.get(i, k)];
                    v.sort_unstable();
                    if i != j && j != k && i != k {
                        prop_assert_eq!(v[1], v[2]);
                    }
                }
            }
        }
    }

    #[test]
    fn lca_sizes_sum_and_node_balance(n in 2usize..60, seed: u64) {
        let h = tree(n, seed);
        let lca = h.lca_sizes();
        let total: usize = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| lca.get(i, j)).sum();
        prop_assert_eq!(3 * total, n * n * n - n);
        let weighted: u128 = h
            .internal_nodes()
            .iter()
            .map(|x| (x.left * x.right * x.size * x.size) as u128)
            .sum();
        prop_assert!(4 * weighted >= (n as u128).pow(4));
    }

    #[test]
    fn merge_list_round_trips(n in 1usize..50, seed: u64) {
        let h = tree(n, seed);
        let back = Dendrogram::parse_merge_list(&h.to_merge_list()).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn revenue_is_dasgupta_revenue(n in 3usize..25, m in 0usize..300, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Dendrogram::random(n, &mut rng).unwrap();
        let t: Vec<Triplet> = (0..m)
            .filter_map(|_| Triplet::new(rng.random_range(0..n as u32), rng.random_range(0..n as u32), rng.random_range(0..n as u32)).ok())
            .collect();
        prop_assert_eq!(trev(&h, &t).unwrap(), drev(&h, &adds3(&t, n).unwrap()).unwrap());
    }

    #[test]
    fn cross_revenue_is_symmetric(n in 3usize..30, a: u64, b: u64) {
        let (h0, h1) = (tree(n, a), tree(n, b));
        prop_assert_eq!(
            trev(&h0, &triplets_from_tree(&h1)).unwrap(),
            trev(&h1, &triplets_from_tree(&h0)).unwrap()
        );
    }

    #[test]
    fn latent_tree_maximises_its_own_revenue(n in 3usize..30, a: u64, b: u64) {
        let (h0, other) = (tree(n, a), tree(n, b));
        let t0 = triplets_from_tree(&h0);
        let best = trev(&h0, &t0).unwrap();
        prop_assert_eq!(best, latent_trev_closed_form(&h0));
        prop_assert!(trev(&other, &t0).unwrap() <= best);
        prop_assert_eq!(consistency_count(&h0, &t0).unwrap(), t0.len());
    }

    #[test]
    fn linkage_ignores_constant_shifts(n in 2usize..25, c in -40i64..40, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SimilarityMatrix::from_fn(n, |_, _| rng.random_range(-5i64..=5));
        prop_assert_eq!(average_linkage(&s).unwrap(), average_linkage(&s.shifted(c)).unwrap());
    }

    #[test]
    fn linkage_follows_relabelling(n in 2usize..25, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SimilarityMatrix::from_fn(n, |_, _| rng.random::<f64>());
        let perm = shuffled(n, &mut rng);
        let moved = average_linkage(&s.permuted(&perm)).unwrap();
        let direct = average_linkage(&s).unwrap();
        // one of the two conventions for the direction of `perm` holds
        prop_assert!(
            moved.is_isomorphic(&direct.relabel(&perm).unwrap()).unwrap()
                || direct.is_isomorphic(&moved.relabel(&perm).unwrap()).unwrap()
        );
    }

    #[test]
    fn linkage_revenue_is_nonnegative(n in 3usize..25, m in 1usize..400, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<Triplet> = (0..m)
            .filter_map(|_| Triplet::new(rng.random_range(0..n as u32), rng.random_range(0..n as u32), rng.random_range(0..n as u32)).ok())
            .collect();
        let h = adds3_average_linkage(&t, n).unwrap();
        prop_assert!(trev(&h, &t).unwrap() >= 0);
    }

    #[test]
    fn restriction_commutes_with_triplet_generation(n in 3usize..20, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Dendrogram::random(n, &mut rng).unwrap();
        let k = rng.random_range(1..=n);
        let subset: Vec<usize> = shuffled(n, &mut rng).into_iter().take(k).collect();
        let (small, _) = h.restrict(&subset).unwrap();
        let restricted = restrict_triplets(&triplets_from_tree(&h), &subset).unwrap();
        prop_assert_eq!(restricted, triplets_from_tree(&small));
    }

    #[test]
    fn sampled_triplets_agree_with_similarity(n in 3usize..20, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SimilarityMatrix::from_fn(n, |_, _| rng.random_range(0i64..4));
        let all = triplets_from_similarity(&s);
        let m = rng.random_range(0..=all.len());
        let sampled = sample_triplets_uniform(&s, m, &mut rng).unwrap();
        prop_assert_eq!(sampled.len(), m);
        prop_assert!(sampled.iter().all(|t| all.contains(t)));
    }

    #[test]
    fn cuts_refine_and_match_themselves(n in 2usize..40, seed: u64) {
        let h = tree(n, seed);
        for k in 1..n {
            let coarse = cut_top(&h, k).unwrap();
            let fine = cut_top(&h, k + 1).unwrap();
            prop_assert!(fine.refines(&coarse));
            prop_assert_eq!(ari(&fine, &fine).unwrap(), 1.0);
        }
    }

    #[test]
    fn ari_is_label_invariant(labels in prop::collection::vec(0u8..5, 2..60), other in prop::collection::vec(0u8..5, 60)) {
        let a = Partition::from_labels(&labels);
        let b = Partition::from_labels(&other[..labels.len()]);
        let renamed: Vec<u8> = labels.iter().map(|x| 9 - x).collect();
        let v = ari(&a, &b).unwrap();
        prop_assert!((ari(&Partition::from_labels(&renamed), &b).unwrap() - v).abs() < 1e-12);
        prop_assert!((ari(&b, &a).unwrap() - v).abs() < 1e-12);
        prop_assert!(v <= 1.0 + 1e-12);
    }
}

/// Every latent tree on up to six leaves is the only maximiser of its own
/// complete triplet set.
#[test]
fn latent_trees_are_strict_maximisers_exhaustively() {
    for n in 3..=6 {
        for h in enumerate_trees(n).unwrap() {
            let t0 = triplets_from_tree(&h);
            let best = brute_force_max_trev(&t0, n).unwrap();
            assert!(best.unique && best.tree.is_isomorphic(&h).unwrap(), "{}", h.canonical_form());
            assert_eq!(best.value, latent_trev_closed_form(&h));
        }
    }
}

#[test]
fn noiseless_planted_similarity_is_recovered_by_linkage() {
    let h = Dendrogram::complete_planted(3, 3).unwrap();
    let lca = h.lca_sizes();
    let s = SimilarityMatrix::from_fn(24, |i, j| -(lca.get(i, j) as i64));
    let al = average_linkage(&s).unwrap();
    for k in [2, 4, 8] {
        assert_eq!(cut_top(&al, k).unwrap(), cut_top(&h, k).unwrap());
    }
}
