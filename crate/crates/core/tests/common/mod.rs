//! Shared test helpers: direct-definition feature oracles, random windows and
//! a nearest-centroid reference classifier.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use drivewear::features::{extract_features, FeatureSet, FEATURES_PER_CHANNEL};
use drivewear::ingest::ChannelKind;
use drivewear::windowing::Window;
use rand::Rng;

pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample standard deviation.
fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn all_equal(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 3 || all_equal(x) {
        return f64::NAN;
    }
    let (m, s) = (mean(x), sample_sd(x));
    n / ((n - 1.0) * (n - 2.0)) * x.iter().map(|v| ((v - m) / s).powi(3)).sum::<f64>()
}

fn kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 4 || all_equal(x) {
        return f64::NAN;
    }
    let (m, s) = (mean(x), sample_sd(x));
    let sum4 = x.iter().map(|v| ((v - m) / s).powi(4)).sum::<f64>();
    n * (n + 1.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0)) * sum4 - 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// First significant decimal digit read off the plain decimal rendering.
pub fn first_digit_plain(v: f64) -> Option<usize> {
    if v == 0.0 || !v.is_finite() {
        return None;
    }
    format!("{}", v.abs())
        .chars()
        .find(|c| c.is_ascii_digit() && *c != '0')
        .map(|c| c.to_digit(10).unwrap() as usize)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

pub fn benford(x: &[f64]) -> f64 {
    let digits: Vec<usize> = x.iter().filter_map(|&v| first_digit_plain(v)).collect();
    if digits.is_empty() {
        return 0.0;
    }
    let freq: Vec<f64> = (1..=9)
        .map(|d| digits.iter().filter(|&&g| g == d).count() as f64 / digits.len() as f64)
        .collect();
    let law: Vec<f64> = (1..=9).map(|d| (1.0 + 1.0 / d as f64).log10()).collect();
    pearson(&freq, &law)
}

/// Naive O(L^2) DFT, `X_k = sum_t x_t exp(-2 pi i k t / L)`, as (re, im) pairs.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let a = TAU * ((k * t) % n) as f64 / n as f64;
                (re + v * a.cos(), im - v * a.sin())
            })
        })
        .collect()
}

fn entropy(x: &[f64]) -> f64 {
    if all_equal(x) {
        return 0.0;
    }
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let spec = naive_dft(&centered);
    let p: Vec<f64> = spec[1..=x.len() / 2].iter().map(|(re, im)| re * re + im * im).collect();
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    -p.iter().map(|v| v / total).filter(|&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

/// Neumaier-compensated sum, so cancelling sums stay accurate to an ulp.
fn compensated_sum(x: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in x {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// `a - b` as an unevaluated pair `(s, e)` with `s + e` exact (Knuth's TwoSum).
fn exact_diff(a: f64, b: f64) -> [f64; 2] {
    let s = a - b;
    let bb = s - a;
    let e = (a - (s - bb)) + (-b - bb);
    [s, e]
}

fn longest(x: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    let mut best = 0usize;
    for i in 0..x.len() {
        let run = x[i..].iter().take_while(|&&v| pred(v)).count();
        best = best.max(run);
    }
    best as f64
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Every feature of one channel from its textbook definition, in column
/// order, with undefined values replaced by zero.
pub fn oracle_features(x: &[f64]) -> [f64; FEATURES_PER_CHANNEL] {
    let n = x.len();
    let nf = n as f64;
    let m = mean(x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / nf;
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let first_max = x.iter().position(|&v| v == max).unwrap();
    let first_min = x.iter().position(|&v| v == min).unwrap();
    let last_max = (0..n).filter(|&i| x[i] == max).max().unwrap();
    let last_min = (0..n).filter(|&i| x[i] == min).max().unwrap();
    let repeats = |i: usize| (0..n).any(|j| j != i && x[j] == x[i]);
    let reoccurring_points: f64 = (0..n).filter(|&i| repeats(i)).map(|i| x[i]).sum();
    let reoccurring_values: f64 = (0..n)
        .filter(|&i| repeats(i) && !(0..i).any(|j| x[j] == x[i]))
        .map(|i| x[i])
        .sum();
    let diffs: Vec<f64> = (1..n).map(|i| x[i] - x[i - 1]).collect();
    let second: f64 = (1..n - 1).map(|i| (x[i + 1] - 2.0 * x[i] + x[i - 1]) / 2.0).sum::<f64>() / (nf - 2.0);
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let raw = [
        kurtosis(x),
        m,
        var.sqrt(),
        max,
        min,
        var,
        skewness(x),
        median(x),
        var.sqrt() / m,
        diffs.iter().map(|d| d.abs()).sum(),
        benford(x),
        x.iter().filter(|&&v| v > m).count() as f64,
        x.iter().filter(|&&v| v < m).count() as f64,
        first_max as f64 / nf,
        first_min as f64 / nf,
        flag((0..n).any(repeats)),
        flag(x.iter().filter(|&&v| v == max).count() > 1),
        flag(x.iter().filter(|&&v| v == min).count() > 1),
        (last_max + 1) as f64 / nf,
        (last_min + 1) as f64 / nf,
        longest(x, |v| v > m),
        longest(x, |v| v < m),
        diffs.iter().map(|d| d.abs()).sum::<f64>() / (nf - 1.0),
        compensated_sum((1..n).flat_map(|i| exact_diff(x[i], x[i - 1]))) / (nf - 1.0),
        second,
        reoccurring_points,
        reoccurring_values,
        x.iter().sum(),
        energy,
        energy / nf,
        entropy(x),
    ];
    raw.map(|v| if v.is_finite() { v } else { 0.0 })
}

/// Features of `x` through the public extraction path (single HR channel).
pub fn library_features(x: &[f64]) -> Vec<f64> {
    let fs = Arc::new(FeatureSet::new(vec![ChannelKind::Hr]).unwrap());
    let w = Window {
        trip_id: "w".into(),
        start_ms: 0.0,
        duration_ms: x.len() as f64 * 100.0,
        values: BTreeMap::from([(ChannelKind::Hr, x.to_vec())]),
    };
    extract_features(&w, &fs).unwrap().values
}

/// A window of varied texture: continuous noise, small integers (duplicates),
/// constants, plateaus with spikes, and offset sinusoids.
pub fn random_window(rng: &mut impl Rng, min_len: usize, max_len: usize) -> Vec<f64> {
    let n = rng.random_range(min_len..=max_len);
    match rng.random_range(0..6) {
        0 => (0..n).map(|_| rng.random_range(-100.0..100.0)).collect(),
        1 => (0..n).map(|_| rng.random_range(-5i32..=5) as f64).collect(),
        2 => vec![rng.random_range(-50.0..50.0); n],
        3 => {
            let base = rng.random_range(0.0..10.0);
            let mut x = vec![base; n];
            let i = rng.random_range(0..n);
            x[i] += rng.random_range(1.0..5.0);
            x
        }
        4 => {
            let f = rng.random_range(0.5..4.0);
            let off = rng.random_range(-1000.0..1000.0);
            (0..n)
                .map(|t| off + 10.0 * (TAU * f * t as f64 / n as f64).sin() + rng.random_range(-1.0..1.0))
                .collect()
        }
        _ => (0..n)
            .map(|_| rng.random_range(0.0f64..1.0).powi(3) * 10f64.powi(rng.random_range(-3..6)))
            .collect(),
    }
}

/// Nearest class centroid on the rows of `x`, fit on `train`.
pub fn nearest_centroid(x: &[Vec<f64>], labels: &[usize], n_classes: usize, train: &[usize], test: &[usize]) -> Vec<usize> {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for &i in train {
        counts[labels[i]] += 1;
        for j in 0..d {
            sums[labels[i]][j] += x[i][j];
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
        .collect();
    test.iter()
        .map(|&i| {
            (0..n_classes)
                .filter(|&c| counts[c] > 0)
                .min_by(|&a, &b| {
                    let da: f64 = (0..d).map(|j| (x[i][j] - centroids[a][j]).powi(2)).sum();
                    let db: f64 = (0..d).map(|j| (x[i][j] - centroids[b][j]).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap()
        })
        .collect()
}

/// Featurizes synthetic trips in memory with default sampling and windowing.
pub fn synth_dataset(spec: &drivewear::synth::SynthSpec, channels: &[ChannelKind]) -> drivewear::LabeledDatasetF64 {
    use drivewear::ingest::SamplingSpec;
    use drivewear::pipeline::featurize_trips;
    use drivewear::windowing::WindowSpec;
    let trips: Vec<_> = drivewear::synth::generate::<f64>(spec)
        .unwrap()
        .into_iter()
        .map(|t| (t.trip, t.labels))
        .collect();
    let fs = Arc::new(FeatureSet::new(channels.to_vec()).unwrap());
    featurize_trips(&trips, &WindowSpec::default(), &fs, &SamplingSpec::default()).unwrap().0
}

/// Rows of the `<channel>.mean` columns.
pub fn window_means(data: &drivewear::LabeledDatasetF64) -> Vec<Vec<f64>> {
    let cols: Vec<usize> = data
        .matrix
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ends_with(".mean"))
        .map(|(i, _)| i)
        .collect();
    data.matrix
        .values
        .rows()
        .into_iter()
        .map(|r| cols.iter().map(|&j| r[j]).collect())
        .collect()
}
