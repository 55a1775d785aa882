use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BaselineError, Result};
use crate::seed::{child_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub num_features: usize,
    pub num_classes: usize,
    pub root: Node,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        self.root.predict(x)
    }
}

/// A candidate split: rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Size-weighted Gini impurity of the two children, divided by the
    /// node size.
    pub impurity: f64,
}

/// `sum_c n_c^2 / n`, as an exact fraction `(numerator, n)`.
fn purity(counts: &[usize], n: usize) -> (u128, u128) {
    (counts.iter().map(|&c| (c * c) as u128).sum(), n as u128)
}

/// Compares two candidates by `sum_side sum_c n_c^2 / n_side`; larger means
/// lower weighted Gini impurity. Exact integer arithmetic, so equal
/// impurities compare equal.
fn score_cmp(a: ((u128, u128), (u128, u128)), b: ((u128, u128), (u128, u128))) -> Ordering {
    let ((al, aln), (ar, arn)) = a;
    let ((bl, bln), (br, brn)) = b;
    let lhs = (al * arn + ar * aln) * (bln * brn);
    let rhs = (bl * brn + br * bln) * (aln * arn);
    lhs.cmp(&rhs)
}

pub(crate) fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

/// Best Gini split of the rows in `idx` over midpoints between sorted
/// distinct feature values, with at least `min_leaf` rows per side. Ties
/// keep the first candidate in (feature, threshold) order.
pub fn best_split(rows: &[Vec<f64>], labels: &[usize], idx: &[usize], num_classes: usize, min_leaf: usize) -> Option<Split> {
    let n = idx.len();
    let num_features = rows.first().map_or(0, Vec::len);
    let mut total = vec![0usize; num_classes];
    for &i in idx {
        total[labels[i]] += 1;
    }
    let mut best: Option<(Split, ((u128, u128), (u128, u128)))> = None;
    let mut order = idx.to_vec();
    for f in 0..num_features {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left = vec![0usize; num_classes];
        let mut right = total.clone();
        for k in 0..n.saturating_sub(1) {
            let i = order[k];
            left[labels[i]] += 1;
            right[labels[i]] -= 1;
            let (lo, hi) = (rows[i][f], rows[order[k + 1]][f]);
            let nl = k + 1;
            if lo == hi || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let score = (purity(&left, nl), purity(&right, n - nl));
            if best.as_ref().map_or(true, |(_, s)| score_cmp(score, *s) == Ordering::Greater) {
                let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                best = Some((
                    Split {
                        feature: f,
                        threshold: lo + (hi - lo) / 2.0,
                        impurity,
                    },
                    score,
                ));
            }
        }
    }
    best.map(|(s, _)| s)
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn grow(rows: &[Vec<f64>], labels: &[usize], idx: &[usize], num_classes: usize, params: &TreeParams, depth: usize) -> Node {
    let mut counts = vec![0usize; num_classes];
    for &i in idx {
        counts[labels[i]] += 1;
    }
    let leaf = Node::Leaf {
        class: majority(&counts),
    };
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= params.max_depth || idx.len() < 2 * params.min_leaf.max(1) {
        return leaf;
    }
    let Some(split) = best_split(rows, labels, idx, num_classes, params.min_leaf.max(1)) else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][split.feature] <= split.threshold);
    let left = grow(rows, labels, &l, num_classes, params, depth + 1);
    let right = grow(rows, labels, &r, num_classes, params, depth + 1);
    match (&left, &right) {
        // Both sides vote the same way; the split changes no prediction.
        (Node::Leaf { class: a }, Node::Leaf { class: b }) if a == b => left,
        _ => Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        },
    }
}

fn check_rows(rows: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<usize> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(BaselineError::TooFewRows(rows.len()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(BaselineError::FeatureLength {
            expected: width,
            found: rows.iter().map(Vec::len).find(|&l| l != width).unwrap_or(0),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(BaselineError::LabelOutOfRange(l));
    }
    Ok(width)
}

/// Greedy CART with Gini impurity. Leaves vote the majority label (ties to
/// the lowest class index).
///
/// Mixed labels on rows that cannot be split at all (identical features)
/// are rejected with `DegenerateData` at the root; deeper in the tree such
/// nodes become forced majority leaves.
pub fn train_tree(rows: &[Vec<f64>], labels: &[usize], num_classes: usize, params: &TreeParams) -> Result<DecisionTree> {
    let num_features = check_rows(rows, labels, num_classes)?;
    let idx: Vec<usize> = (0..rows.len()).collect();
    let mixed = labels.iter().any(|&l| l != labels[0]);
    if mixed && best_split(rows, labels, &idx, num_classes, 1).is_none() {
        return Err(BaselineError::DegenerateData);
    }
    Ok(DecisionTree {
        num_features,
        num_classes,
        root: grow(rows, labels, &idx, num_classes, params, 0),
    })
}

/// How a bag was drawn: its RNG seed and the per-class draw count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagDescriptor {
    pub seed: u64,
    pub per_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggingEnsemble {
    pub num_classes: usize,
    pub num_features: usize,
    pub params: TreeParams,
    pub trees: Vec<DecisionTree>,
    pub bags: Vec<BagDescriptor>,
}

pub const ENSEMBLE_SIZE: usize = 71;

/// Draws `per_class` row indices with replacement from each class.
pub fn draw_bag<R: Rng + ?Sized>(by_class: &[Vec<usize>], per_class: usize, rng: &mut R) -> Vec<usize> {
    let mut bag = Vec::with_capacity(per_class * by_class.len());
    for members in by_class {
        for _ in 0..per_class {
            bag.push(members[rng.random_range(0..members.len())]);
        }
    }
    bag
}

fn rows_by_class(labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(BaselineError::EmptyClass(c));
    }
    Ok(by_class)
}

/// Balanced bagging: each tree is fit to a bag holding `n_min` rows drawn
/// with replacement from every class, where `n_min` is the smallest class
/// count. Trees train in parallel and are assembled in tree order.
pub fn balanced_bagging_train(
    rows: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    n_trees: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<BaggingEnsemble> {
    let num_features = check_rows(rows, labels, num_classes)?;
    let by_class = rows_by_class(labels, num_classes)?;
    let per_class = by_class.iter().map(Vec::len).min().expect("at least one class");
    let bags: Vec<BagDescriptor> = (0..n_trees)
        .map(|t| BagDescriptor {
            seed: child_seed(seed, &format!("baseline/bag/{t}")),
            per_class,
        })
        .collect();
    let trees = bags
        .par_iter()
        .map(|bag| {
            let mut rng = rng_for(bag.seed, "draw");
            let picked = draw_bag(&by_class, bag.per_class, &mut rng);
            let bag_rows: Vec<Vec<f64>> = picked.iter().map(|&i| rows[i].clone()).collect();
            let bag_labels: Vec<usize> = picked.iter().map(|&i| labels[i]).collect();
            train_tree(&bag_rows, &bag_labels, num_classes, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggingEnsemble {
        num_classes,
        num_features,
        params: *params,
        trees,
        bags,
    })
}

impl BaggingEnsemble {
    /// Per-class vote counts.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0usize; self.num_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        votes
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.num_features {
            return Err(BaselineError::FeatureLength {
                expected: self.num_features,
                found: x.len(),
            });
        }
        Ok(majority(&self.votes(x)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> Result<BaggingEnsemble> {
        serde_json::from_str(text).map_err(|e| BaselineError::Json(e.to_string()))
    }
}

/// Majority vote over explicit per-tree predictions (ties to the lowest).
pub fn vote(predictions: &[usize], num_classes: usize) -> usize {
    let mut counts = vec![0usize; num_classes];
    for &p in predictions {
        counts[p] += 1;
    }
    majority(&counts)
}
