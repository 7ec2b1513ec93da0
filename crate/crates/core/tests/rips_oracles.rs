//! Reduction-vs-oracle equivalence for persistent homology: the pivot-cached
//! sparse reduction must agree exactly with a dense, unoptimized reduction
//! and, in dimension 0, with union-find single linkage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocast_core::tda::{rips_persistence, PointCloud};
use topocast_core::testkit::{canonical_pairs, naive_rips_diagram, random_cloud, single_linkage_h0};

#[test]
fn random_clouds_match_both_oracles_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let n = rng.gen_range(2..=15);
        let dim = rng.gen_range(2..=4);
        let cloud = random_cloud(rng.gen(), n, dim);
        let max_scale = 4.0;

        let fast = rips_persistence(&cloud, max_scale, 1).unwrap();
        let naive = naive_rips_diagram(&cloud, max_scale, 1);
        assert_eq!(
            canonical_pairs(&fast.pairs),
            canonical_pairs(&naive),
            "case {case}: n = {n}, dim = {dim}"
        );

        let h0_fast: Vec<_> = fast.pairs.iter().filter(|p| p.dim == 0).cloned().collect();
        let h0_oracle = single_linkage_h0(&cloud, max_scale);
        assert_eq!(
            canonical_pairs(&h0_fast),
            canonical_pairs(&h0_oracle),
            "case {case} H0"
        );
    }
}

#[test]
fn truncated_scale_matches_oracles_including_essentials() {
    // A small max_scale leaves several components unmerged; the infinite
    // bars must line up too.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..20 {
        let n = rng.gen_range(3..=12);
        let cloud = random_cloud(rng.gen(), n, 2);
        let max_scale = 0.6;
        let fast = rips_persistence(&cloud, max_scale, 1).unwrap();
        let naive = naive_rips_diagram(&cloud, max_scale, 1);
        assert_eq!(
            canonical_pairs(&fast.pairs),
            canonical_pairs(&naive),
            "case {case}"
        );
        let h0_fast: Vec<_> = fast.pairs.iter().filter(|p| p.dim == 0).cloned().collect();
        assert_eq!(
            canonical_pairs(&h0_fast),
            canonical_pairs(&single_linkage_h0(&cloud, max_scale)),
            "case {case} H0"
        );
    }
}

#[test]
fn unit_square_loop_is_exact() {
    let cloud = PointCloud::new(2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
    let d = rips_persistence(&cloud, 2.0, 1).unwrap();
    let positive: Vec<_> = d
        .pairs
        .iter()
        .filter(|p| p.dim == 1 && p.death > p.birth)
        .collect();
    assert_eq!(positive.len(), 1);
    assert!((positive[0].birth - 1.0).abs() < 1e-9);
    assert!((positive[0].death - 2.0f64.sqrt()).abs() < 1e-9);
}
