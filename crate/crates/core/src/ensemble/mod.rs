//! Consensus clustering over several base partitions of the same objects.
//!
//! Two routes to a consensus: `gmm_voting` aligns labels against a reference
//! partition (maximum-weight bipartite matching on the label contingency
//! matrix), accumulates a relabel-voting matrix, and fits a Gaussian mixture
//! over its rows; `gmm_pair` skips alignment, represents each object by its
//! row of pairwise co-clustering counts, and fits the mixture there. Either
//! way the consensus label is the argmax-posterior component, with empty
//! components dropped.

mod gmm;
mod hungarian;

pub use gmm::{gmm_fit, Covariances, CovarianceKind, GmmModel};
pub use hungarian::{assignment_weight, max_weight_assignment};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cluster::Clustering;
use crate::math::Matrix;
use crate::{Error, Result};

/// M base clusterings over the same N objects. `k` is the label-space size
/// shared after padding: the largest cluster count among the members.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleInput {
    labelings: Vec<Vec<usize>>,
    n: usize,
    k: usize,
}

impl EnsembleInput {
    pub fn new(labelings: Vec<Vec<usize>>) -> Result<EnsembleInput> {
        if labelings.len() < 2 {
            return Err(Error::Cardinality(format!(
                "an ensemble needs at least 2 clusterings, got {}",
                labelings.len()
            )));
        }
        let n = labelings[0].len();
        if n == 0 {
            return Err(Error::Cardinality("empty clusterings".into()));
        }
        if labelings.iter().any(|l| l.len() != n) {
            return Err(Error::Shape("clusterings cover different object counts".into()));
        }
        let k = labelings
            .iter()
            .map(|l| l.iter().max().map_or(0, |&m| m + 1))
            .max()
            .unwrap_or(0);
        Ok(EnsembleInput { labelings, n, k })
    }

    pub fn from_clusterings(clusterings: &[Clustering]) -> Result<EnsembleInput> {
        EnsembleInput::new(clusterings.iter().map(|c| c.labels.clone()).collect())
    }

    pub fn n_clusterings(&self) -> usize {
        self.labelings.len()
    }

    pub fn n_objects(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self, g: usize) -> &[usize] {
        &self.labelings[g]
    }
}

/// Label co-occurrence counts between a reference labeling and another,
/// padded square to `k` so unequal cluster counts still match.
pub fn contingency(reference: &[usize], other: &[usize], k: usize) -> Matrix {
    let mut counts = Matrix::zeros(k, k);
    for (&l, &l2) in reference.iter().zip(other) {
        counts.set(l, l2, counts.get(l, l2) + 1.0);
    }
    counts
}

/// Aligns every non-reference labeling to the reference by the permutation
/// maximizing the summed contingency weight, found with the Hungarian
/// algorithm. Partitions are unchanged as set systems; only names move.
pub fn relabel(input: &EnsembleInput, reference: usize) -> Result<EnsembleInput> {
    if reference >= input.n_clusterings() {
        return Err(Error::Cardinality(format!(
            "reference index {reference} out of {} clusterings",
            input.n_clusterings()
        )));
    }
    let k = input.k;
    let ref_labels = &input.labelings[reference];
    let mut out = Vec::with_capacity(input.labelings.len());
    for (g, labels) in input.labelings.iter().enumerate() {
        if g == reference {
            out.push(labels.clone());
            continue;
        }
        let omega = contingency(ref_labels, labels, k);
        let perm = max_weight_assignment(&omega);
        // perm[l] = l' matches reference label l with this clustering's l';
        // rewrite label l' as l.
        let mut to_ref = vec![0usize; k];
        for (l, &lp) in perm.iter().enumerate() {
            to_ref[lp] = l;
        }
        out.push(labels.iter().map(|&l| to_ref[l]).collect());
    }
    EnsembleInput::new(out)
}

/// N×k counts of how often each object received each (aligned) label.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VotingMatrix {
    pub counts: Matrix,
}

/// Plurality votes over an already-relabeled ensemble; every row sums to M.
pub fn voting_matrix(relabeled: &EnsembleInput) -> VotingMatrix {
    let mut counts = Matrix::zeros(relabeled.n, relabeled.k);
    for labels in &relabeled.labelings {
        for (i, &l) in labels.iter().enumerate() {
            counts.set(i, l, counts.get(i, l) + 1.0);
        }
    }
    VotingMatrix { counts }
}

/// N×N symmetric counts of how often each object pair was co-clustered.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoassociationMatrix {
    pub counts: Matrix,
}

/// Pairwise co-clustering counts; label-invariant, so no relabeling needed.
pub fn coassociation(input: &EnsembleInput) -> CoassociationMatrix {
    let n = input.n;
    let mut counts = Matrix::zeros(n, n);
    for labels in &input.labelings {
        for i in 0..n {
            for j in i..n {
                if labels[i] == labels[j] {
                    counts.set(i, j, counts.get(i, j) + 1.0);
                    if i != j {
                        counts.set(j, i, counts.get(j, i) + 1.0);
                    }
                }
            }
        }
    }
    CoassociationMatrix { counts }
}

/// A consensus partition plus each object's winning posterior mass.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Consensus {
    pub clustering: Clustering,
    pub max_posterior: Vec<f64>,
}

fn consensus_from_features(
    features: &Matrix,
    k_max: usize,
    seed: u64,
    covariance: CovarianceKind,
) -> Result<Consensus> {
    let model = gmm_fit(features, k_max, seed, 200, 1e-7, covariance)?;
    let (raw_labels, max_posterior) = model.predict(features);

    // Drop empty components, renumber in component order.
    let mut used = vec![false; k_max];
    for &l in &raw_labels {
        used[l] = true;
    }
    let mut remap = vec![usize::MAX; k_max];
    let mut next = 0usize;
    for (c, &u) in used.iter().enumerate() {
        if u {
            remap[c] = next;
            next += 1;
        }
    }
    let labels: Vec<usize> = raw_labels.iter().map(|&l| remap[l]).collect();
    let k = next;

    // Inertia of the consensus in the feature space it was fit in.
    let m = features.cols();
    let mut sums = vec![vec![0.0f64; m]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (j, v) in features.row(i).iter().enumerate() {
            sums[l][j] += v;
        }
    }
    let mut inertia = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        for (j, v) in features.row(i).iter().enumerate() {
            let c = sums[l][j] / counts[l] as f64;
            inertia += (v - c) * (v - c);
        }
    }

    Ok(Consensus {
        clustering: Clustering { labels, k, inertia },
        max_posterior,
    })
}

/// Voting consensus: relabel against the reference, accumulate votes, fit a
/// full-covariance mixture over vote rows, assign by highest posterior.
pub fn gmm_voting_with_reference(
    input: &EnsembleInput,
    k_max: usize,
    seed: u64,
    reference: usize,
) -> Result<Consensus> {
    let aligned = relabel(input, reference)?;
    let votes = voting_matrix(&aligned);
    consensus_from_features(&votes.counts, k_max, seed, CovarianceKind::Full)
}

/// [`gmm_voting_with_reference`] with the first clustering as reference.
pub fn gmm_voting(input: &EnsembleInput, k_max: usize, seed: u64) -> Result<Consensus> {
    gmm_voting_with_reference(input, k_max, seed, 0)
}

/// Pairwise consensus: each object represented by its co-association row.
/// Uses diagonal covariances once the row dimension outgrows a full fit.
pub fn gmm_pair(input: &EnsembleInput, k_max: usize, seed: u64) -> Result<Consensus> {
    let co = coassociation(input);
    let covariance = if input.n_objects() > 200 {
        CovarianceKind::Diagonal
    } else {
        CovarianceKind::Full
    };
    consensus_from_features(&co.counts, k_max, seed, covariance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::adjusted_rand_index;

    fn input(labelings: &[&[usize]]) -> EnsembleInput {
        EnsembleInput::new(labelings.iter().map(|l| l.to_vec()).collect()).unwrap()
    }

    #[test]
    fn relabel_of_identical_partition_is_identity() {
        let e = input(&[&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]]);
        let aligned = relabel(&e, 0).unwrap();
        assert_eq!(aligned.labels(1), e.labels(1));
    }

    #[test]
    fn relabel_undoes_a_label_swap() {
        let e = input(&[&[0, 0, 1, 1, 2], &[1, 1, 0, 0, 2]]);
        let aligned = relabel(&e, 0).unwrap();
        assert_eq!(aligned.labels(1), &[0, 0, 1, 1, 2]);
    }

    #[test]
    fn relabel_preserves_co_membership() {
        let e = input(&[&[0, 1, 1, 2, 0], &[2, 0, 0, 1, 2]]);
        let aligned = relabel(&e, 0).unwrap();
        for g in 0..2 {
            let before = e.labels(g);
            let after = aligned.labels(g);
            for i in 0..before.len() {
                for j in 0..before.len() {
                    assert_eq!(before[i] == before[j], after[i] == after[j]);
                }
            }
        }
    }

    #[test]
    fn voting_rows_sum_to_m_and_match_table_rows() {
        // Two k=2 clusterings agreeing on object 0, split on object 1.
        let e = input(&[&[0, 0, 1], &[0, 1, 1]]);
        let aligned = relabel(&e, 0).unwrap();
        let rv = voting_matrix(&aligned);
        assert_eq!(rv.counts.row(0), &[2.0, 0.0]);
        assert_eq!(rv.counts.row(1), &[1.0, 1.0]);
        for i in 0..3 {
            let s: f64 = rv.counts.row(i).iter().sum();
            assert_eq!(s, 2.0);
        }
    }

    #[test]
    fn identical_clusterings_vote_one_hot() {
        let e = input(&[&[0, 1, 1, 0], &[0, 1, 1, 0], &[0, 1, 1, 0]]);
        let rv = voting_matrix(&relabel(&e, 0).unwrap());
        for i in 0..4 {
            let row = rv.counts.row(i);
            assert!(row.contains(&3.0));
            assert_eq!(row.iter().sum::<f64>(), 3.0);
        }
    }

    #[test]
    fn coassociation_counts_identical_clusterings() {
        let e = input(&[&[0, 0, 1], &[1, 1, 0]]);
        let co = coassociation(&e);
        assert_eq!(co.counts.get(0, 1), 2.0);
        assert_eq!(co.counts.get(0, 2), 0.0);
        assert_eq!(co.counts.get(1, 2), 0.0);
        for i in 0..3 {
            assert_eq!(co.counts.get(i, i), 2.0);
        }
    }

    #[test]
    fn coassociation_matches_naive_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let labelings: Vec<Vec<usize>> = (0..3)
            .map(|_| (0..8).map(|_| rng.gen_range(0..3)).collect())
            .collect();
        let e = EnsembleInput::new(labelings.clone()).unwrap();
        let co = coassociation(&e);
        for i in 0..8 {
            for j in 0..8 {
                let manual = labelings
                    .iter()
                    .filter(|l| l[i] == l[j])
                    .count() as f64;
                assert_eq!(co.counts.get(i, j), manual);
            }
        }
    }

    #[test]
    fn consensus_of_identical_clusterings_is_that_clustering() {
        let base = vec![0usize, 0, 1, 1, 2, 2, 0, 1];
        let e = EnsembleInput::new(vec![base.clone(), base.clone(), base.clone()]).unwrap();
        for seed in 0..5 {
            let vote = gmm_voting(&e, 3, seed).unwrap();
            assert!((adjusted_rand_index(&vote.clustering.labels, &base) - 1.0).abs() < 1e-12);
            let pair = gmm_pair(&e, 3, seed).unwrap();
            assert!((adjusted_rand_index(&pair.clustering.labels, &base) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_consensus_separates_constant_blocks() {
        // Objects 0..4 always together, 4..8 always together.
        let e = input(&[
            &[0, 0, 0, 0, 1, 1, 1, 1],
            &[1, 1, 1, 1, 0, 0, 0, 0],
            &[0, 0, 0, 0, 1, 1, 1, 1],
        ]);
        let c = gmm_pair(&e, 2, 7).unwrap();
        let labels = &c.clustering.labels;
        assert!(labels[0..4].iter().all(|&l| l == labels[0]));
        assert!(labels[4..8].iter().all(|&l| l == labels[4]));
        assert_ne!(labels[0], labels[4]);
    }

    #[test]
    fn consistent_label_permutation_leaves_coassociation_unchanged() {
        let e = input(&[&[0, 1, 2, 0], &[1, 0, 2, 1]]);
        let permuted = input(&[&[2, 0, 1, 2], &[0, 2, 1, 0]]);
        assert_eq!(coassociation(&e).counts, coassociation(&permuted).counts);
    }
}
