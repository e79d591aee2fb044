//! Random forest of Gini-impurity CART trees on bootstrap samples.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed::derive_indexed;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestOptions {
    pub n_trees: usize,
    /// Features examined per split; `None` means `floor(√p)`.
    pub max_features: Option<usize>,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestOptions {
    fn default() -> Self {
        ForestOptions { n_trees: 100, max_features: None, max_depth: 12, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        positive: bool,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive } => return positive,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Out-of-bag accuracy; `None` without bootstrap or when no point was
    /// ever out of bag.
    pub oob_accuracy: Option<f64>,
}

impl RandomForest {
    /// Fraction of trees voting positive.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        self.trees.iter().filter(|t| t.predict(x)).count() as f64 / self.trees.len() as f64
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    mtry: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        Node::Leaf { positive: 2 * pos >= idx.len() }
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(self.leaf(idx));
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        if depth >= self.max_depth || pos == 0 || pos == idx.len() {
            return slot;
        }
        let p = self.x[0].len();
        let parent = gini(pos, idx.len());
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sample(rng, p, self.mtry).into_iter() {
            idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left_pos = 0;
            for k in 1..idx.len() {
                left_pos += self.y[idx[k - 1]] as usize;
                let (lo, hi) = (self.x[idx[k - 1]][feature], self.x[idx[k]][feature]);
                if lo == hi {
                    continue;
                }
                let n = idx.len();
                let impurity = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(pos - left_pos, n - k)) / n as f64;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, lo + (hi - lo) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return slot;
        };
        let mut left: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] <= threshold).collect();
        let mut right: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] > threshold).collect();
        let l = self.build(&mut left, depth + 1, rng);
        let r = self.build(&mut right, depth + 1, rng);
        self.nodes[slot] = Node::Split { feature, threshold, left: l, right: r };
        slot
    }
}

/// Grows one unpruned tree on the rows `idx`.
pub fn grow_tree(x: &[Vec<f64>], y: &[bool], idx: &[usize], mtry: usize, max_depth: usize, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder { x, y, mtry, max_depth, nodes: Vec::new() };
    let mut idx = idx.to_vec();
    b.build(&mut idx, 0, &mut rng);
    Tree { nodes: b.nodes }
}

pub fn train_forest(x: &[Vec<f64>], y: &[bool], opts: &ForestOptions) -> Result<RandomForest> {
    let n = x.len();
    if n != y.len() || n == 0 {
        return Err(Error::Shape(format!("{n} vectors, {} labels", y.len())));
    }
    if !y.iter().any(|&v| v) || y.iter().all(|&v| v) {
        return Err(Error::SingleClass);
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::Shape("feature vectors must share a positive length".into()));
    }
    let mtry = opts.max_features.unwrap_or(((p as f64).sqrt().floor() as usize).max(1)).clamp(1, p);
    let grown: Vec<(Tree, Vec<bool>)> = (0..opts.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = derive_indexed(opts.seed, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut in_bag = vec![!opts.bootstrap; n];
            let idx: Vec<usize> = if opts.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            (grow_tree(x, y, &idx, mtry, opts.max_depth, rng.gen()), in_bag)
        })
        .collect();
    let mut votes = vec![(0usize, 0usize); n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            votes[i].0 += tree.predict(&x[i]) as usize;
            votes[i].1 += 1;
        }
    }
    let scored: Vec<bool> = votes
        .iter()
        .zip(y)
        .filter(|((_, total), _)| *total > 0)
        .map(|(&(pos, total), &yi)| (2 * pos >= total) == yi)
        .collect();
    let oob_accuracy = (!scored.is_empty()).then(|| scored.iter().filter(|&&c| c).count() as f64 / scored.len() as f64);
    Ok(RandomForest { trees: grown.into_iter().map(|(t, _)| t).collect(), n_features: p, oob_accuracy })
}
