//! CART regression trees grown level by level over presorted feature
//! columns, and the forest / boosting ensembles built on them.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{BoostParams, ForestParams, TreeParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf(T),
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict_row(&self, x: ArrayView1<T>) -> T {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Row indices of each feature column in ascending value order (ties by index).
pub fn presort<T: Scalar>(x: ArrayView2<T>) -> Vec<Vec<usize>> {
    (0..x.ncols())
        .map(|f| {
            let col = x.column(f);
            let mut idx: Vec<usize> = (0..x.nrows()).collect();
            idx.sort_by(|&a, &b| {
                col[a]
                    .partial_cmp(&col[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    gain: T,
    feature: usize,
    threshold: T,
}

struct Frontier<T> {
    node: usize,
    depth: usize,
    weight: T,
    sum: T,
    features: Option<Vec<bool>>,
    best: Option<Candidate<T>>,
}

/// Grows one tree on `targets` with per-row integer weights (0 = excluded).
pub fn grow<T: Scalar, R: Rng>(
    x: ArrayView2<T>,
    sorted: &[Vec<usize>],
    targets: &[T],
    weights: &[u32],
    params: &TreeParams,
    rng: &mut R,
) -> Tree<T> {
    let (n, d) = x.dim();
    let n_features = ((params.max_features * d as f64).round() as usize).clamp(1, d.max(1));
    let min_leaf = T::count(params.min_samples_leaf);
    let min_split = T::count(params.min_samples_split);

    let mut nodes: Vec<Node<T>> = Vec::new();
    // Which frontier slot each row currently sits in; usize::MAX once settled.
    let mut slot_of = vec![usize::MAX; n];
    let (w0, s0) = (0..n).fold((T::zero(), T::zero()), |(w, s), i| {
        let wi = T::of(weights[i] as f64);
        (w + wi, s + wi * targets[i])
    });
    for (i, s) in slot_of.iter_mut().enumerate() {
        if weights[i] > 0 {
            *s = 0;
        }
    }
    nodes.push(Node::Leaf(if w0 > T::zero() { s0 / w0 } else { T::zero() }));
    let mut frontier = vec![Frontier {
        node: 0,
        depth: 0,
        weight: w0,
        sum: s0,
        features: None,
        best: None,
    }];

    while !frontier.is_empty() {
        for f in frontier.iter_mut() {
            if n_features < d {
                let mut mask = vec![false; d];
                for j in sample(rng, d, n_features) {
                    mask[j] = true;
                }
                f.features = Some(mask);
            }
        }
        let splittable: Vec<bool> = frontier
            .iter()
            .map(|f| {
                f.weight >= min_split
                    && f.weight >= min_leaf + min_leaf
                    && params.max_depth.is_none_or(|m| f.depth < m)
            })
            .collect();

        let mut left_w = vec![T::zero(); frontier.len()];
        let mut left_s = vec![T::zero(); frontier.len()];
        let mut last: Vec<Option<T>> = vec![None; frontier.len()];
        for (feature, order) in sorted.iter().enumerate() {
            left_w.iter_mut().for_each(|v| *v = T::zero());
            left_s.iter_mut().for_each(|v| *v = T::zero());
            last.iter_mut().for_each(|v| *v = None);
            for &i in order {
                let slot = slot_of[i];
                if slot == usize::MAX || !splittable[slot] {
                    continue;
                }
                let fr = &mut frontier[slot];
                if fr.features.as_ref().is_some_and(|m| !m[feature]) {
                    continue;
                }
                let v = x[[i, feature]];
                if let Some(prev) = last[slot] {
                    if v > prev {
                        let wl = left_w[slot];
                        let wr = fr.weight - wl;
                        if wl >= min_leaf && wr >= min_leaf {
                            let sl = left_s[slot];
                            let sr = fr.sum - sl;
                            let gain = sl * sl / wl + sr * sr / wr - fr.sum * fr.sum / fr.weight;
                            if fr.best.is_none_or(|b| gain > b.gain) {
                                let mut threshold = (prev + v) / T::of(2.0);
                                if !(threshold < v) {
                                    threshold = prev;
                                }
                                fr.best = Some(Candidate {
                                    gain,
                                    feature,
                                    threshold,
                                });
                            }
                        }
                    }
                }
                let wi = T::of(weights[i] as f64);
                left_w[slot] = left_w[slot] + wi;
                left_s[slot] = left_s[slot] + wi * targets[i];
                last[slot] = Some(v);
            }
        }

        // Gains below this are float noise on a pure node.
        let noise = T::epsilon() * T::of(64.0);
        let mut next = Vec::new();
        let mut remap = vec![None; frontier.len()];
        for (slot, fr) in frontier.iter().enumerate() {
            let Some(best) = fr.best else { continue };
            let scale = fr.sum.abs() * fr.sum.abs() / fr.weight + T::one();
            if !(best.gain > noise * scale) {
                continue;
            }
            let left = nodes.len();
            nodes.push(Node::Leaf(T::zero()));
            nodes.push(Node::Leaf(T::zero()));
            nodes[fr.node] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right: left + 1,
            };
            remap[slot] = Some((next.len(), best));
            for node in [left, left + 1] {
                next.push(Frontier {
                    node,
                    depth: fr.depth + 1,
                    weight: T::zero(),
                    sum: T::zero(),
                    features: None,
                    best: None,
                });
            }
        }
        for i in 0..n {
            let slot = slot_of[i];
            if slot == usize::MAX {
                continue;
            }
            match remap[slot] {
                None => slot_of[i] = usize::MAX,
                Some((base, best)) => {
                    let child = if x[[i, best.feature]] <= best.threshold { base } else { base + 1 };
                    slot_of[i] = child;
                    let wi = T::of(weights[i] as f64);
                    next[child].weight = next[child].weight + wi;
                    next[child].sum = next[child].sum + wi * targets[i];
                }
            }
        }
        for fr in &next {
            let value = if fr.weight > T::zero() { fr.sum / fr.weight } else { T::zero() };
            nodes[fr.node] = Node::Leaf(value);
        }
        frontier = next;
    }
    Tree { nodes }
}

/// Bagged ensemble of fully grown trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> Forest<T> {
    pub fn fit(x: ArrayView2<T>, y: ArrayView1<T>, params: &ForestParams, seed: u64) -> Self {
        let n = x.nrows();
        let sorted = presort(x);
        let targets: Vec<T> = y.to_vec();
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let weights = if params.bootstrap {
                    let mut w = vec![0u32; n];
                    for _ in 0..n {
                        w[rng.random_range(0..n)] += 1;
                    }
                    w
                } else {
                    vec![1u32; n]
                };
                grow(x, &sorted, &targets, &weights, &params.tree, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_row(&self, x: ArrayView1<T>) -> T {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<T>() / T::count(self.trees.len())
    }
}

/// Squared-loss gradient boosting with shrinkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Boosted<T> {
    pub base: T,
    pub learning_rate: T,
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> Boosted<T> {
    pub fn fit(x: ArrayView2<T>, y: ArrayView1<T>, params: &BoostParams, seed: u64) -> Self {
        let n = x.nrows();
        let sorted = presort(x);
        let base = y.iter().copied().sum::<T>() / T::count(n);
        let lr = T::of(params.learning_rate);
        let mut pred = vec![base; n];
        let weights = vec![1u32; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(params.n_rounds);
        for _ in 0..params.n_rounds {
            let residual: Vec<T> = y.iter().zip(&pred).map(|(&t, &p)| t - p).collect();
            let tree = grow(x, &sorted, &residual, &weights, &params.tree, &mut rng);
            for (i, p) in pred.iter_mut().enumerate() {
                *p = *p + lr * tree.predict_row(x.row(i));
            }
            trees.push(tree);
        }
        Self {
            base,
            learning_rate: lr,
            trees,
        }
    }

    pub fn predict_row(&self, x: ArrayView1<T>) -> T {
        self.base
            + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<T>()
    }
}
