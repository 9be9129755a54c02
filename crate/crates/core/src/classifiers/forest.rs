//! Random forest of Gini-split trees grown on bootstrap resamples.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{argmax, ProbabilityVector};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    /// Smallest number of bootstrap samples allowed in a leaf.
    pub min_leaf: usize,
    /// Features examined per node; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { trees: 100, min_leaf: 1, max_features: None }
    }
}

impl ForestConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::InvalidHyperparameter("forest trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidHyperparameter("forest min_leaf must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::InvalidHyperparameter("forest max_features must be >= 1".into()));
        }
        Ok(())
    }

    fn features_per_node(&self, d: usize) -> usize {
        self.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Arena-allocated tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split { feature, threshold, left, right } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    n_classes: usize,
    input_dim: usize,
}

impl ForestModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Fraction of trees voting for each class.
    pub(crate) fn predict_proba(&self, x: ArrayView1<'_, f64>) -> ProbabilityVector {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        let total = self.trees.len() as f64;
        ProbabilityVector::new(votes.into_iter().map(|v| v as f64 / total).collect()).expect("vote fractions lie on the simplex")
    }
}

/// Sum over child nodes of `n * gini`, i.e. `n - sum(count^2) / n`.
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    m: usize,
    min_leaf: usize,
    mtry: usize,
}

impl Grower<'_> {
    fn grow(&self, samples: Vec<usize>, rng: &mut rng::Rng) -> Tree {
        let mut nodes = vec![TreeNode::Leaf { class: 0 }];
        let mut stack = vec![(0usize, samples)];
        while let Some((slot, samples)) = stack.pop() {
            let mut counts = vec![0usize; self.m];
            for &i in &samples {
                counts[self.y[i]] += 1;
            }
            let majority = argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
            let pure = counts[majority] == samples.len();
            let split = if pure || samples.len() < 2 * self.min_leaf { None } else { self.best_split(&samples, &counts, rng) };
            match split {
                None => nodes[slot] = TreeNode::Leaf { class: majority },
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| self.x[[i, feature]] <= threshold);
                    let left = nodes.len();
                    nodes.push(TreeNode::Leaf { class: majority });
                    let right = nodes.len();
                    nodes.push(TreeNode::Leaf { class: majority });
                    nodes[slot] = TreeNode::Split { feature, threshold, left, right };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        Tree { nodes }
    }

    /// Best Gini split among `mtry` random features; `None` if every
    /// sampled feature is constant on this node.
    fn best_split(&self, samples: &[usize], counts: &[usize], rng: &mut rng::Rng) -> Option<(usize, f64)> {
        let d = self.x.ncols();
        let n = samples.len();
        let mut features = index::sample(rng, d, self.mtry).into_vec();
        features.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = samples.to_vec();
        let mut left = vec![0usize; self.m];
        let mut right = vec![0usize; self.m];
        for &f in &features {
            order.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(counts);
            for pos in 0..n - 1 {
                let c = self.y[order[pos]];
                left[c] += 1;
                right[c] -= 1;
                let nl = pos + 1;
                let (lo, hi) = (self.x[[order[pos], f]], self.x[[order[pos + 1], f]]);
                if lo >= hi || nl < self.min_leaf || n - nl < self.min_leaf {
                    continue;
                }
                let impurity = weighted_gini(&left, nl) + weighted_gini(&right, n - nl);
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, f, 0.5 * (lo + hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[usize], m: usize, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    let n = x.nrows();
    let grower = Grower { x, y, m, min_leaf: cfg.min_leaf, mtry: cfg.features_per_node(x.ncols()) };
    let trees = (0..cfg.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(rng::derive_seed(seed, t as u64), streams::FOREST);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grower.grow(bootstrap, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees, n_classes: m, input_dim: x.ncols() })
}
