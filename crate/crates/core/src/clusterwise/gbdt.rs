//! Gradient-boosted regression trees, one-vs-rest, squared error on class
//! indicator residuals. Splits are found on binned feature ranges, which is
//! plenty for the low-dimensional series features used here.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::Matrix;
use crate::{Error, Result};

const SPLIT_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 200,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(data: &Matrix, residuals: &[f64], members: &[usize]) -> Option<SplitChoice> {
    let n = members.len();
    if n < 2 {
        return None;
    }
    let total_sum: f64 = members.iter().map(|&i| residuals[i]).sum();
    let total_sq: f64 = members.iter().map(|&i| residuals[i] * residuals[i]).sum();
    let parent_sse = total_sq - total_sum * total_sum / n as f64;
    let mut best: Option<SplitChoice> = None;

    for feature in 0..data.cols() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in members {
            let v = data.get(i, feature);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            continue;
        }
        let width = (hi - lo) / SPLIT_BINS as f64;
        let mut count = [0usize; SPLIT_BINS];
        let mut sum = [0.0f64; SPLIT_BINS];
        for &i in members {
            let v = data.get(i, feature);
            let mut bin = ((v - lo) / width) as usize;
            if bin >= SPLIT_BINS {
                bin = SPLIT_BINS - 1;
            }
            count[bin] += 1;
            sum[bin] += residuals[i];
        }
        let mut left_n = 0usize;
        let mut left_sum = 0.0;
        for b in 0..SPLIT_BINS - 1 {
            left_n += count[b];
            left_sum += sum[b];
            if left_n == 0 || left_n == n {
                continue;
            }
            let right_n = n - left_n;
            let right_sum = total_sum - left_sum;
            // SSE reduction; the sum-of-squares terms cancel.
            let gain = left_sum * left_sum / left_n as f64
                + right_sum * right_sum / right_n as f64
                - total_sum * total_sum / n as f64;
            if gain > best.as_ref().map_or(1e-12, |b| b.gain) {
                best = Some(SplitChoice {
                    feature,
                    threshold: lo + width * (b + 1) as f64,
                    gain,
                });
            }
        }
        let _ = parent_sse;
    }
    best
}

fn grow(
    data: &Matrix,
    residuals: &[f64],
    members: Vec<usize>,
    depth: usize,
    max_depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mean = if members.is_empty() {
        0.0
    } else {
        members.iter().map(|&i| residuals[i]).sum::<f64>() / members.len() as f64
    };
    if depth >= max_depth {
        nodes.push(Node::Leaf(mean));
        return nodes.len() - 1;
    }
    let Some(split) = best_split(data, residuals, &members) else {
        nodes.push(Node::Leaf(mean));
        return nodes.len() - 1;
    };
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for &i in &members {
        if data.get(i, split.feature) <= split.threshold {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    if left.is_empty() || right.is_empty() {
        nodes.push(Node::Leaf(mean));
        return nodes.len() - 1;
    }
    let at = nodes.len();
    nodes.push(Node::Leaf(0.0)); // placeholder, patched below
    let left_idx = grow(data, residuals, left, depth + 1, max_depth, nodes);
    let right_idx = grow(data, residuals, right, depth + 1, max_depth, nodes);
    nodes[at] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: left_idx,
        right: right_idx,
    };
    at
}

/// One-vs-rest boosted-tree classifier over fixed-length series features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelClassifier {
    /// Distinct training labels, ascending; predictions are members.
    pub classes: Vec<usize>,
    priors: Vec<f64>,
    trees: Vec<Vec<Tree>>,
    params: GbdtParams,
    n_features: usize,
    pub training_accuracy: f64,
}

impl LabelClassifier {
    /// Per-class additive scores (prior + shrunk tree sums).
    pub fn decision_scores(&self, x: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, _)| {
                let mut score = self.priors[c];
                for tree in &self.trees[c] {
                    score += self.params.learning_rate * tree.eval(x);
                }
                score
            })
            .collect()
    }

    /// Argmax class; ties resolve to the lowest class label.
    pub fn predict(&self, x: &[f64]) -> usize {
        let scores = self.decision_scores(x);
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        self.classes[best]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Trains the one-vs-rest booster on (features, labels).
///
/// Residuals are class-indicator minus current score; each round fits one
/// depth-bounded regression tree per class. The seed is accepted for
/// interface stability; tree growth itself is deterministic.
pub fn train_label_classifier(
    features: &Matrix,
    labels: &[usize],
    params: &GbdtParams,
    _seed: u64,
) -> Result<LabelClassifier> {
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::Shape("labels/features length mismatch".into()));
    }
    if n < 10 {
        return Err(Error::Cardinality(format!(
            "classifier training needs >= 10 series, got {n}"
        )));
    }
    if !features.is_finite() {
        return Err(Error::Data("non-finite feature values".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(
            "classifier needs at least 2 classes".into(),
        ));
    }

    let k = classes.len();
    let class_index = |label: usize| classes.binary_search(&label).expect("seen label");
    let mut indicator = vec![vec![0.0f64; n]; k];
    for (i, &l) in labels.iter().enumerate() {
        indicator[class_index(l)][i] = 1.0;
    }
    let priors: Vec<f64> = indicator
        .iter()
        .map(|ind| ind.iter().sum::<f64>() / n as f64)
        .collect();

    let mut scores = vec![vec![0.0f64; n]; k];
    for c in 0..k {
        scores[c].iter_mut().for_each(|s| *s = priors[c]);
    }
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new(); k];
    let all: Vec<usize> = (0..n).collect();
    let mut residuals = vec![0.0f64; n];
    for _ in 0..params.rounds {
        for c in 0..k {
            for i in 0..n {
                residuals[i] = indicator[c][i] - scores[c][i];
            }
            let mut nodes = Vec::new();
            grow(features, &residuals, all.clone(), 0, params.max_depth, &mut nodes);
            let tree = Tree { nodes };
            for i in 0..n {
                scores[c][i] += params.learning_rate * tree.eval(features.row(i));
            }
            trees[c].push(tree);
        }
    }

    let mut correct = 0usize;
    for i in 0..n {
        let mut best = 0usize;
        for c in 1..k {
            if scores[c][i] > scores[best][i] {
                best = c;
            }
        }
        if classes[best] == labels[i] {
            correct += 1;
        }
    }

    Ok(LabelClassifier {
        classes,
        priors,
        trees,
        params: *params,
        n_features: features.cols(),
        training_accuracy: correct as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(rounds: usize) -> GbdtParams {
        GbdtParams {
            rounds,
            ..GbdtParams::default()
        }
    }

    #[test]
    fn separable_data_reaches_full_training_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.gen_range(-1.0..1.0f64), rng.gen_range(-1.0..1.0)])
            .collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let clf = train_label_classifier(&data, &labels, &params(50), 0).unwrap();
        assert_eq!(clf.training_accuracy, 1.0);
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(clf.predict(data.row(i)), l);
        }
    }

    #[test]
    fn constant_features_predict_the_majority_class() {
        let data = Matrix::from_rows(&vec![vec![1.0, 2.0]; 20]).unwrap();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i < 6)).collect();
        let clf = train_label_classifier(&data, &labels, &params(30), 0).unwrap();
        assert_eq!(clf.predict(&[1.0, 2.0]), 1);
        assert_eq!(clf.predict(&[-5.0, 0.0]), 1);
        // Majority baseline: 14/20.
        assert!(clf.training_accuracy >= 0.7 - 1e-12);
    }

    #[test]
    fn accuracy_is_at_least_the_majority_baseline() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..5 {
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| vec![rng.gen_range(-1.0..1.0f64), rng.gen_range(-1.0..1.0)])
                .collect();
            let labels: Vec<usize> = (0..40).map(|_| rng.gen_range(0..3)).collect();
            let data = Matrix::from_rows(&rows).unwrap();
            let clf = train_label_classifier(&data, &labels, &params(40), 0).unwrap();
            let mut counts = [0usize; 3];
            for &l in &labels {
                counts[l] += 1;
            }
            let majority = *counts.iter().max().unwrap() as f64 / 40.0;
            assert!(
                clf.training_accuracy >= majority - 1e-12,
                "case {case}: {} < {majority}",
                clf.training_accuracy
            );
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data = Matrix::from_rows(&vec![vec![0.0]; 12]).unwrap();
        let labels = vec![3usize; 12];
        assert_eq!(
            train_label_classifier(&data, &labels, &params(5), 0)
                .unwrap_err()
                .category(),
            "DegenerateLabels"
        );
    }

    #[test]
    fn predicted_labels_come_from_training_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen_range(-1.0..1.0f64)])
            .collect();
        // Non-contiguous labels: {2, 7}.
        let labels: Vec<usize> = rows.iter().map(|r| if r[0] > 0.0 { 7 } else { 2 }).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let clf = train_label_classifier(&data, &labels, &params(20), 0).unwrap();
        for i in 0..30 {
            let p = clf.predict(data.row(i));
            assert!(p == 2 || p == 7);
        }
    }
}
