use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{best_partition, best_split, SplitTest};
use super::{Dataset, ForestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        test: SplitTest,
        left: u32,
        right: u32,
    },
    Leaf {
        /// `true` votes graft failure.
        vote: bool,
        positives: u32,
        negatives: u32,
    },
}

/// A decision tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Per-feature Gini decrease summed over this tree's splits, each
    /// weighted by its node's share of the bootstrap sample.
    pub importance: Vec<f64>,
}

impl Tree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn vote(&self, x: &[f64]) -> bool {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { vote, .. } => return *vote,
                TreeNode::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    at = if test.goes_left(x[*feature]) {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + go(t, *left as usize).max(go(t, *right as usize))
                }
            }
        }
        go(self, 0)
    }
}

/// Indices of a 1:1 resample: `n₊` draws with replacement from the positives
/// followed by `n₊` draws with replacement from the negatives.
pub fn balanced_bootstrap<R: Rng>(labels: &[bool], rng: &mut R) -> Result<Vec<u32>, ForestError> {
    let positives: Vec<u32> = (0..labels.len() as u32)
        .filter(|&i| labels[i as usize])
        .collect();
    let negatives: Vec<u32> = (0..labels.len() as u32)
        .filter(|&i| !labels[i as usize])
        .collect();
    if positives.is_empty() || negatives.len() < positives.len() {
        return Err(ForestError::DegenerateBalance {
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    let k = positives.len();
    let mut sample = Vec::with_capacity(2 * k);
    sample.extend((0..k).map(|_| positives[rng.random_range(0..k)]));
    sample.extend((0..k).map(|_| negatives[rng.random_range(0..negatives.len())]));
    Ok(sample)
}

fn leaf(data: &Dataset, sample: &[u32]) -> TreeNode {
    let positives = sample
        .iter()
        .filter(|&&i| data.labels()[i as usize])
        .count() as u32;
    let negatives = sample.len() as u32 - positives;
    TreeNode::Leaf {
        vote: positives >= negatives,
        positives,
        negatives,
    }
}

/// Grows a tree on `sample` to exhaustion.
///
/// At each node a random `mtry` subset of features is searched first. When
/// none of them decreases impurity the remaining features are searched, and
/// failing that any valid zero-gain partition is taken, so a node only
/// becomes a leaf when it is pure or all its rows are identical. Ties in the
/// leaf vote go to failure.
pub fn grow_tree<R: Rng>(
    data: &Dataset,
    sample: &[u32],
    mtry: usize,
    min_leaf: usize,
    rng: &mut R,
) -> Result<Tree, ForestError> {
    if sample.is_empty() {
        return Err(ForestError::EmptyNode);
    }
    let p = data.n_features();
    let mtry = mtry.clamp(1, p);
    let root_n = sample.len() as f64;
    let mut importance = vec![0.0; p];
    let mut nodes = vec![TreeNode::Leaf {
        vote: true,
        positives: 0,
        negatives: 0,
    }];
    let mut order: Vec<usize> = (0..p).collect();
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, sample.to_vec())];

    while let Some((slot, idx)) = stack.pop() {
        let pos = idx.iter().filter(|&&i| data.labels()[i as usize]).count();
        if pos == 0 || pos == idx.len() {
            nodes[slot] = leaf(data, &idx);
            continue;
        }
        order.shuffle(rng);
        let split = best_split(data, &idx, &order[..mtry], min_leaf)
            .or_else(|| best_split(data, &idx, &order[mtry..], min_leaf))
            .or_else(|| best_partition(data, &idx, &order, min_leaf));
        let Some(split) = split else {
            nodes[slot] = leaf(data, &idx);
            continue;
        };
        importance[split.feature] += split.gain * idx.len() as f64 / root_n;
        let col = data.column(split.feature);
        let (l, r): (Vec<u32>, Vec<u32>) = idx
            .iter()
            .partition(|&&i| split.test.goes_left(col[i as usize]));
        debug_assert!(!l.is_empty() && !r.is_empty());
        let left = nodes.len() as u32;
        nodes.push(leaf(data, &l));
        let right = nodes.len() as u32;
        nodes.push(leaf(data, &r));
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            test: split.test,
            left,
            right,
        };
        // right first so the left subtree is expanded first
        stack.push((right as usize, r));
        stack.push((left as usize, l));
    }
    Ok(Tree { nodes, importance })
}
