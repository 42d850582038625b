//! CART decision trees and bagged / randomized tree ensembles.
//!
//! Splits minimize class-weighted Gini impurity. Samples with feature value
//! `< threshold` go left. Leaves hold weighted class-probability vectors and
//! the ensemble prediction is the mean of its trees' leaf vectors.

use std::str::FromStr;

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::ClassWeights;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scalar::Scalar;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Exhaustive scan of midpoints between consecutive distinct values.
    BestThreshold,
    /// One uniform threshold per candidate feature.
    RandomThreshold,
}

/// How many features are drawn as split candidates at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateFeatures {
    /// floor(sqrt(F)), at least 1.
    Sqrt,
    All,
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub n_candidate_features: CandidateFeatures,
    pub split_mode: SplitMode,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            n_candidate_features: CandidateFeatures::Sqrt,
            split_mode: SplitMode::BestThreshold,
            seed: 0,
        }
    }
}

impl TreeParams {
    fn candidates(&self, n_features: usize) -> Result<usize> {
        if self.min_samples_split < 2 {
            return Err(Error::Model("min_samples_split must be at least 2".into()));
        }
        let k = match self.n_candidate_features {
            CandidateFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            CandidateFeatures::All => n_features,
            CandidateFeatures::Count(k) => k,
        };
        if k == 0 || k > n_features {
            return Err(Error::Model(format!(
                "n_candidate_features = {k} outside 1..={n_features}"
            )));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
    pub class_weights: Option<ClassWeights>,
    /// Seeds every tree; `tree.seed` is ignored inside a forest.
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ModelKind::Forest.params(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Tree,
    Forest,
    Extra,
}

impl ModelKind {
    /// Standard configurations: a single tree over all features, a bootstrap
    /// random forest, and extremely randomized trees without bootstrap.
    pub fn params(self, seed: u64) -> ForestParams {
        match self {
            ModelKind::Tree => ForestParams {
                n_trees: 1,
                bootstrap: false,
                tree: TreeParams {
                    n_candidate_features: CandidateFeatures::All,
                    seed,
                    ..TreeParams::default()
                },
                class_weights: None,
                seed,
            },
            ModelKind::Forest => ForestParams {
                n_trees: 100,
                bootstrap: true,
                tree: TreeParams { seed, ..TreeParams::default() },
                class_weights: None,
                seed,
            },
            ModelKind::Extra => ForestParams {
                n_trees: 100,
                bootstrap: false,
                tree: TreeParams {
                    split_mode: SplitMode::RandomThreshold,
                    seed,
                    ..TreeParams::default()
                },
                class_weights: None,
                seed,
            },
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tree" => Ok(ModelKind::Tree),
            "forest" | "random_forest" => Ok(ModelKind::Forest),
            "extra" | "extra_trees" => Ok(ModelKind::Extra),
            _ => Err(Error::Config(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
    Leaf {
        proba: Vec<f64>,
    },
}

impl<T: Scalar> TreeNode<T> {
    pub fn leaf_for(&self, row: &[T]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { proba } => return proba,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// `1 - sum p_c^2` over weighted class counts.
pub fn gini_impurity(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Model("Gini impurity of an empty node".into()));
    }
    Ok(gini(counts, total))
}

fn gini(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct Split<T> {
    feature: usize,
    threshold: T,
    /// Sum over children of weight * impurity.
    score: f64,
}

struct Grower<'a, T> {
    x: ArrayView2<'a, T>,
    labels: &'a [usize],
    n_classes: usize,
    /// Per-class sample weight.
    class_weight: Vec<f64>,
    params: TreeParams,
    n_candidates: usize,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Grower<'_, T> {
    fn counts(&self, samples: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes];
        for &s in samples {
            let l = self.labels[s];
            c[l] += self.class_weight[l];
        }
        c
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> TreeNode<T> {
        let counts = self.counts(&samples);
        let total: f64 = counts.iter().sum();
        let leaf = |counts: Vec<f64>| TreeNode::Leaf {
            proba: counts.iter().map(|c| c / total).collect(),
        };
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || samples.len() < self.params.min_samples_split
        {
            return leaf(counts);
        }
        let parent = gini(&counts, total) * total;
        let Some(best) = self.best_split(&samples, &counts) else {
            return leaf(counts);
        };
        if !(best.score < parent - 1e-12 * total) {
            return leaf(counts);
        }
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[[s, best.feature]] < best.threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(&mut self, samples: &[usize], counts: &[f64]) -> Option<Split<T>> {
        let n_features = self.x.ncols();
        let mut order: Vec<usize> = (0..n_features).collect();
        let mut best: Option<Split<T>> = None;
        let mut evaluated = 0;
        let mut column: Vec<(T, usize)> = Vec::with_capacity(samples.len());
        for i in 0..n_features {
            if evaluated == self.n_candidates {
                break;
            }
            // Lazy Fisher-Yates: draw features without replacement on demand.
            let j = self.rng.random_range(i..n_features);
            order.swap(i, j);
            let feature = order[i];
            column.clear();
            column.extend(samples.iter().map(|&s| (self.x[[s, feature]], s)));
            let (lo, hi) = column.iter().fold((column[0].0, column[0].0), |(lo, hi), &(v, _)| (lo.min(v), hi.max(v)));
            if !(lo < hi) {
                // Constant within this node; does not use up a candidate slot.
                continue;
            }
            evaluated += 1;
            let found = match self.params.split_mode {
                SplitMode::BestThreshold => self.scan_thresholds(&mut column, counts),
                SplitMode::RandomThreshold => {
                    let u: f64 = self.rng.random();
                    let mut t = lo + T::from_f64_lossy(u) * (hi - lo);
                    if !(t > lo) || !(t <= hi) {
                        t = lo + (hi - lo) / T::from_f64_lossy(2.0);
                    }
                    if !(t > lo) {
                        t = hi;
                    }
                    Some((t, self.score_threshold(&column, t)))
                }
            };
            if let Some((threshold, score)) = found {
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Split { feature, threshold, score });
                }
            }
        }
        best
    }

    fn score_threshold(&self, column: &[(T, usize)], t: T) -> f64 {
        let mut left = vec![0.0; self.n_classes];
        let mut right = vec![0.0; self.n_classes];
        for &(v, s) in column {
            let l = self.labels[s];
            if v < t {
                left[l] += self.class_weight[l];
            } else {
                right[l] += self.class_weight[l];
            }
        }
        weighted_children(&left, &right)
    }

    /// Best midpoint threshold for one feature, with its score.
    fn scan_thresholds(&self, column: &mut [(T, usize)], counts: &[f64]) -> Option<(T, f64)> {
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut left = vec![0.0; self.n_classes];
        let mut right = counts.to_vec();
        let mut best: Option<(T, f64)> = None;
        for i in 0..column.len() - 1 {
            let (v, s) = column[i];
            let l = self.labels[s];
            left[l] += self.class_weight[l];
            right[l] -= self.class_weight[l];
            let next = column[i + 1].0;
            if !(v < next) {
                continue;
            }
            let score = weighted_children(&left, &right);
            if best.is_none_or(|(_, b)| score < b) {
                let mut t = v + (next - v) / T::from_f64_lossy(2.0);
                if !(t > v) {
                    t = next;
                }
                best = Some((t, score));
            }
        }
        best
    }
}

fn weighted_children(left: &[f64], right: &[f64]) -> f64 {
    let wl: f64 = left.iter().sum();
    let wr: f64 = right.iter().sum();
    let gl = if wl > 0.0 { gini(left, wl) * wl } else { 0.0 };
    let gr = if wr > 0.0 { gini(right, wr) * wr } else { 0.0 };
    gl + gr
}

fn check_inputs<T>(x: &ArrayView2<'_, T>, labels: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Model("cannot fit on an empty matrix".into()));
    }
    if labels.len() != x.nrows() {
        return Err(Error::Model(format!("{} labels for {} rows", labels.len(), x.nrows())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Model(format!("label {l} out of range for {n_classes} classes")));
    }
    Ok(())
}

fn grow_tree<T: Scalar>(
    x: ArrayView2<'_, T>,
    labels: &[usize],
    n_classes: usize,
    params: &TreeParams,
    weights: Option<&ClassWeights>,
    samples: Vec<usize>,
    rng: ChaCha8Rng,
) -> Result<TreeNode<T>> {
    let n_candidates = params.candidates(x.ncols())?;
    let class_weight = (0..n_classes).map(|c| weights.map_or(1.0, |w| w.get(c))).collect();
    let mut grower = Grower {
        x,
        labels,
        n_classes,
        class_weight,
        params: *params,
        n_candidates,
        rng,
    };
    Ok(grower.grow(samples, 0))
}

pub fn fit_tree<T: Scalar>(
    x: ArrayView2<'_, T>,
    labels: &[usize],
    n_classes: usize,
    params: &TreeParams,
    weights: Option<&ClassWeights>,
) -> Result<TreeNode<T>> {
    check_inputs(&x, labels, n_classes)?;
    let rng = ChaCha8Rng::seed_from_u64(params.seed);
    grow_tree(x, labels, n_classes, params, weights, (0..x.nrows()).collect(), rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest<T> {
    pub n_classes: usize,
    pub column_names: Vec<String>,
    pub params: ForestParams,
    pub trees: Vec<TreeNode<T>>,
}

#[derive(Serialize, Deserialize)]
struct ForestDocument<T> {
    format_version: u32,
    forest: Forest<T>,
}

pub fn fit_forest<T: Scalar>(
    m: &FeatureMatrix<T>,
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Result<Forest<T>> {
    fit_forest_on(m.values.view(), &m.columns, labels, n_classes, params)
}

/// Fits on a raw matrix view; `column_names` is recorded for provenance.
pub fn fit_forest_on<T: Scalar>(
    x: ArrayView2<'_, T>,
    column_names: &[String],
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Result<Forest<T>> {
    check_inputs(&x, labels, n_classes)?;
    if params.n_trees == 0 {
        return Err(Error::Model("a forest needs at least one tree".into()));
    }
    let n = x.nrows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let samples = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(x, labels, n_classes, &params.tree, params.class_weights.as_ref(), samples, rng)
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        n_classes,
        column_names: column_names.to_vec(),
        params: params.clone(),
        trees,
    })
}

impl<T: Scalar> Forest<T> {
    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    pub fn predict_proba(&self, row: &[T]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::Model(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf_for(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }

    pub fn predict(&self, row: &[T]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(row)?))
    }

    pub fn predict_rows(&self, x: ArrayView2<'_, T>) -> Result<Vec<usize>> {
        x.outer_iter()
            .map(|r| match r.as_slice() {
                Some(s) => self.predict(s),
                None => self.predict(&r.to_vec()),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ForestDocument {
            format_version: FOREST_FORMAT_VERSION,
            forest: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let doc: ForestDocument<T> = serde::Deserialize::deserialize(&mut de)?;
        de.end()?;
        if doc.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported forest format version {}",
                doc.format_version
            )));
        }
        Ok(doc.forest)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
