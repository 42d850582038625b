//! Class balancing: inverse-frequency class weights and SMOTE oversampling.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceMode {
    None,
    ClassWeights,
    Smote,
}

impl std::str::FromStr for BalanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(BalanceMode::None),
            "weights" | "class_weights" | "classweights" => Ok(BalanceMode::ClassWeights),
            "smote" => Ok(BalanceMode::Smote),
            _ => Err(Error::Config(format!("unknown balance mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub mode: BalanceMode,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for BalanceSpec {
    fn default() -> Self {
        Self {
            mode: BalanceMode::None,
            smote_k: 5,
            seed: 0,
        }
    }
}

/// Per-class sample weights, `N / (C * n_c)` over the classes present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: BTreeMap<usize, f64>,
}

impl ClassWeights {
    /// Weight of `class`; classes absent when the weights were fit count as 1.
    pub fn get(&self, class: usize) -> f64 {
        self.weights.get(&class).copied().unwrap_or(1.0)
    }
}

pub fn class_counts(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

pub fn class_weights(labels: &[usize]) -> Result<ClassWeights> {
    if labels.is_empty() {
        return Err(Error::Balance("cannot weight an empty label list".into()));
    }
    let counts = class_counts(labels);
    let n = labels.len() as f64;
    let c = counts.len() as f64;
    let weights = counts.into_iter().map(|(k, nk)| (k, n / (c * nk as f64))).collect();
    Ok(ClassWeights { weights })
}

/// Provenance of one synthetic row: `base + fraction * (neighbor - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub class: usize,
    /// Row index of the base sample in the input matrix.
    pub base: usize,
    /// Row index of the neighbor; equals `base` for replicated singletons.
    pub neighbor: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput<T> {
    /// Input rows first, in their original order, then synthetic rows grouped by class.
    pub values: Array2<T>,
    pub labels: Vec<usize>,
    pub synthetic: Vec<SyntheticSample>,
    /// Classes with a single sample, oversampled by replication.
    pub replicated_classes: Vec<usize>,
}

/// Column means and standard deviations; zero deviations are replaced by 1.
fn column_scaling<T: Scalar>(x: ArrayView2<'_, T>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for col in x.axis_iter(Axis(1)) {
        let m = col.iter().map(|v| v.as_f64()).sum::<f64>() / n;
        let var = col.iter().map(|v| (v.as_f64() - m).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        means.push(m);
        scales.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
    }
    (means, scales)
}

/// Indices (into `members`) of the `k` nearest other members of each member.
fn nearest_neighbors(z: &Array2<f64>, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .enumerate()
        .map(|(a, &ra)| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &rb)| {
                    let dist = z
                        .row(ra)
                        .iter()
                        .zip(z.row(rb).iter())
                        .map(|(p, q)| (p - q) * (p - q))
                        .sum::<f64>();
                    (dist, b)
                })
                .collect();
            d.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            d.truncate(k);
            d.into_iter().map(|(_, b)| b).collect()
        })
        .collect()
}

/// Oversamples every minority class up to the majority count with synthetic
/// points interpolated towards same-class nearest neighbors.
///
/// Neighbors are found on columns standardized with statistics of `x` itself,
/// so callers must pass training rows only.
pub fn smote_oversample<T: Scalar>(x: &Array2<T>, labels: &[usize], spec: &BalanceSpec) -> Result<SmoteOutput<T>> {
    if x.nrows() == 0 {
        return Err(Error::Balance("cannot oversample an empty matrix".into()));
    }
    if labels.len() != x.nrows() {
        return Err(Error::Balance(format!("{} labels for {} rows", labels.len(), x.nrows())));
    }
    if spec.smote_k == 0 {
        return Err(Error::Balance("smote_k must be at least 1".into()));
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    let target = members.values().map(Vec::len).max().unwrap_or(0);

    let (means, scales) = column_scaling(x.view());
    let z = Array2::from_shape_fn(x.dim(), |(i, j)| (x[[i, j]].as_f64() - means[j]) / scales[j]);

    let per_class: Vec<(usize, Vec<SyntheticSample>, bool)> = members
        .par_iter()
        .filter(|(_, rows)| rows.len() < target)
        .map(|(&class, rows)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(class as u64);
            let needed = target - rows.len();
            if rows.len() == 1 {
                let s = SyntheticSample {
                    class,
                    base: rows[0],
                    neighbor: rows[0],
                    fraction: 0.0,
                };
                return (class, vec![s; needed], true);
            }
            let k = spec.smote_k.min(rows.len() - 1);
            let neighbors = nearest_neighbors(&z, rows, k);
            let samples = (0..needed)
                .map(|_| {
                    let a = rng.random_range(0..rows.len());
                    let b = neighbors[a][rng.random_range(0..k)];
                    SyntheticSample {
                        class,
                        base: rows[a],
                        neighbor: rows[b],
                        fraction: rng.random::<f64>(),
                    }
                })
                .collect();
            (class, samples, false)
        })
        .collect();

    let synthetic: Vec<SyntheticSample> = per_class.iter().flat_map(|(_, s, _)| s.iter().copied()).collect();
    let replicated_classes = per_class.iter().filter(|(_, _, r)| *r).map(|(c, _, _)| *c).collect();

    let total = x.nrows() + synthetic.len();
    let mut values = Array2::zeros((total, x.ncols()));
    values.slice_mut(ndarray::s![..x.nrows(), ..]).assign(x);
    let mut out_labels = labels.to_vec();
    for (r, s) in synthetic.iter().enumerate() {
        let u = T::from_f64_lossy(s.fraction);
        let mut row = values.row_mut(x.nrows() + r);
        for (j, v) in row.iter_mut().enumerate() {
            let p = x[[s.base, j]];
            let q = x[[s.neighbor, j]];
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            *v = (p + u * (q - p)).max(lo).min(hi);
        }
        out_labels.push(s.class);
    }
    Ok(SmoteOutput {
        values,
        labels: out_labels,
        synthetic,
        replicated_classes,
    })
}
