//! Per-window time- and frequency-domain features.
//!
//! Every channel of a window contributes [`FEATURES_PER_CHANNEL`] values in the
//! order of [`Feature::ALL`]. Feature vectors are laid out channels-major,
//! features-minor, and columns are named `"<channel>.<feature>"`.
//!
//! A few definitions worth pinning down:
//!
//! * variance and standard deviation are population statistics (divide by L);
//! * skewness is the bias-corrected Fisher-Pearson coefficient and kurtosis the
//!   bias-corrected excess kurtosis, both undefined for zero variance;
//! * locations are fractions of the window length: first index / L for the
//!   `first_*` features and (last index + 1) / L for the `last_*` ones;
//! * duplicates are judged by exact bit equality;
//! * energy is the time-domain sum of squares (equal to the DFT energy by
//!   Parseval), power is energy / L, entropy is the normalized spectral
//!   entropy of the one-sided periodogram of the mean-removed signal.
//!
//! Any value that comes out non-finite is replaced by zero and counted.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ChannelKind;
use crate::scalar::Scalar;
use crate::windowing::Window;

pub const FEATURES_PER_CHANNEL: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Feature {
    Kurtosis,
    Mean,
    StandardDeviation,
    Maximum,
    Minimum,
    Variance,
    Skewness,
    Median,
    VariationCoefficient,
    AbsoluteSumOfChanges,
    BenfordCorrelation,
    CountAboveMean,
    CountBelowMean,
    FirstLocationOfMaximum,
    FirstLocationOfMinimum,
    HasDuplicate,
    HasDuplicateMax,
    HasDuplicateMin,
    LastLocationOfMaximum,
    LastLocationOfMinimum,
    LongestStrikeAboveMean,
    LongestStrikeBelowMean,
    MeanAbsChange,
    MeanChange,
    MeanSecondDerivativeCentral,
    SumOfReoccurringDataPoints,
    SumOfReoccurringValues,
    SumValues,
    Energy,
    Power,
    Entropy,
}

impl Feature {
    pub const ALL: [Feature; FEATURES_PER_CHANNEL] = [
        Feature::Kurtosis,
        Feature::Mean,
        Feature::StandardDeviation,
        Feature::Maximum,
        Feature::Minimum,
        Feature::Variance,
        Feature::Skewness,
        Feature::Median,
        Feature::VariationCoefficient,
        Feature::AbsoluteSumOfChanges,
        Feature::BenfordCorrelation,
        Feature::CountAboveMean,
        Feature::CountBelowMean,
        Feature::FirstLocationOfMaximum,
        Feature::FirstLocationOfMinimum,
        Feature::HasDuplicate,
        Feature::HasDuplicateMax,
        Feature::HasDuplicateMin,
        Feature::LastLocationOfMaximum,
        Feature::LastLocationOfMinimum,
        Feature::LongestStrikeAboveMean,
        Feature::LongestStrikeBelowMean,
        Feature::MeanAbsChange,
        Feature::MeanChange,
        Feature::MeanSecondDerivativeCentral,
        Feature::SumOfReoccurringDataPoints,
        Feature::SumOfReoccurringValues,
        Feature::SumValues,
        Feature::Energy,
        Feature::Power,
        Feature::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Kurtosis => "kurtosis",
            Feature::Mean => "mean",
            Feature::StandardDeviation => "standard_deviation",
            Feature::Maximum => "maximum",
            Feature::Minimum => "minimum",
            Feature::Variance => "variance",
            Feature::Skewness => "skewness",
            Feature::Median => "median",
            Feature::VariationCoefficient => "variation_coefficient",
            Feature::AbsoluteSumOfChanges => "absolute_sum_of_changes",
            Feature::BenfordCorrelation => "benford_correlation",
            Feature::CountAboveMean => "count_above_mean",
            Feature::CountBelowMean => "count_below_mean",
            Feature::FirstLocationOfMaximum => "first_location_of_maximum",
            Feature::FirstLocationOfMinimum => "first_location_of_minimum",
            Feature::HasDuplicate => "has_duplicate",
            Feature::HasDuplicateMax => "has_duplicate_max",
            Feature::HasDuplicateMin => "has_duplicate_min",
            Feature::LastLocationOfMaximum => "last_location_of_maximum",
            Feature::LastLocationOfMinimum => "last_location_of_minimum",
            Feature::LongestStrikeAboveMean => "longest_strike_above_mean",
            Feature::LongestStrikeBelowMean => "longest_strike_below_mean",
            Feature::MeanAbsChange => "mean_abs_change",
            Feature::MeanChange => "mean_change",
            Feature::MeanSecondDerivativeCentral => "mean_second_derivative_central",
            Feature::SumOfReoccurringDataPoints => "sum_of_reoccurring_data_points",
            Feature::SumOfReoccurringValues => "sum_of_reoccurring_values",
            Feature::SumValues => "sum_values",
            Feature::Energy => "energy",
            Feature::Power => "power",
            Feature::Entropy => "entropy",
        }
    }

    pub fn is_frequency_domain(self) -> bool {
        matches!(self, Feature::Energy | Feature::Power | Feature::Entropy)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Feature(format!("unknown feature `{s}`")))
    }
}

/// Splits a `"channel.feature"` column name.
pub fn parse_column_name(name: &str) -> Option<(ChannelKind, Feature)> {
    let (c, f) = name.split_once('.')?;
    Some((c.parse().ok()?, f.parse().ok()?))
}

/// Which channels are featurized, in output order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    channels: Vec<ChannelKind>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self {
            channels: ChannelKind::ALL.to_vec(),
        }
    }
}

impl FeatureSet {
    pub fn new(channels: Vec<ChannelKind>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Feature("feature set needs at least one channel".into()));
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(Error::Feature(format!("channel {c} listed twice")));
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[ChannelKind] {
        &self.channels
    }

    pub fn time_features() -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(|f| !f.is_frequency_domain())
    }

    pub fn frequency_features() -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(|f| f.is_frequency_domain())
    }

    pub fn width(&self) -> usize {
        self.channels.len() * FEATURES_PER_CHANNEL
    }

    pub fn column_names(&self) -> Vec<String> {
        self.channels
            .iter()
            .flat_map(|c| Feature::ALL.iter().map(move |f| format!("{c}.{f}")))
            .collect()
    }
}

pub fn mean<T: Scalar>(x: &[T]) -> T {
    sum_values(x) / T::from_count(x.len())
}

pub fn sum_values<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a + b)
}

pub fn median<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::nan();
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / T::from_f64_lossy(2.0)
    }
}

pub fn maximum<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().reduce(T::max).unwrap_or_else(T::nan)
}

pub fn minimum<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().reduce(T::min).unwrap_or_else(T::nan)
}

/// Central moment of order `k` (population normalization).
fn central_moment<T: Scalar>(x: &[T], mu: T, k: i32) -> T {
    x.iter().fold(T::zero(), |a, &v| a + (v - mu).powi(k)) / T::from_count(x.len())
}

pub fn variance<T: Scalar>(x: &[T]) -> T {
    central_moment(x, mean(x), 2)
}

pub fn standard_deviation<T: Scalar>(x: &[T]) -> T {
    variance(x).sqrt()
}

/// True when every sample has the same bit pattern. The rounded mean of such a
/// window can differ from the samples by an ulp, leaving a spurious tiny variance.
fn is_constant<T: Scalar>(x: &[T]) -> bool {
    x.iter().all(|v| v.bit_pattern() == x[0].bit_pattern())
}

/// Bias-corrected sample skewness G1. NaN for fewer than 3 samples or zero variance.
pub fn skewness<T: Scalar>(x: &[T]) -> T {
    let n = x.len();
    if n < 3 {
        return T::nan();
    }
    let mu = mean(x);
    let m2 = central_moment(x, mu, 2);
    let m3 = central_moment(x, mu, 3);
    if m2 == T::zero() || is_constant(x) {
        return T::nan();
    }
    let nf = T::from_count(n);
    let one = T::one();
    let two = T::from_f64_lossy(2.0);
    (nf * (nf - one)).sqrt() / (nf - two) * m3 / m2.powf(T::from_f64_lossy(1.5))
}

/// Bias-corrected excess kurtosis G2. NaN for fewer than 4 samples or zero variance.
pub fn kurtosis<T: Scalar>(x: &[T]) -> T {
    let n = x.len();
    if n < 4 {
        return T::nan();
    }
    let mu = mean(x);
    let m2 = central_moment(x, mu, 2);
    let m4 = central_moment(x, mu, 4);
    if m2 == T::zero() || is_constant(x) {
        return T::nan();
    }
    let nf = T::from_count(n);
    let one = T::one();
    let two = T::from_f64_lossy(2.0);
    let three = T::from_f64_lossy(3.0);
    let six = T::from_f64_lossy(6.0);
    let g2 = m4 / (m2 * m2) - three;
    (nf - one) / ((nf - two) * (nf - three)) * ((nf + one) * g2 + six)
}

/// std / mean; non-finite when the mean is zero.
pub fn variation_coefficient<T: Scalar>(x: &[T]) -> T {
    standard_deviation(x) / mean(x)
}

pub fn absolute_sum_of_changes<T: Scalar>(x: &[T]) -> T {
    x.windows(2).fold(T::zero(), |a, w| a + (w[1] - w[0]).abs())
}

pub fn mean_abs_change<T: Scalar>(x: &[T]) -> T {
    if x.len() < 2 {
        return T::nan();
    }
    absolute_sum_of_changes(x) / T::from_count(x.len() - 1)
}

pub fn mean_change<T: Scalar>(x: &[T]) -> T {
    if x.len() < 2 {
        return T::nan();
    }
    (x[x.len() - 1] - x[0]) / T::from_count(x.len() - 1)
}

/// Mean over interior points of (x[i+1] - 2 x[i] + x[i-1]) / 2.
pub fn mean_second_derivative_central<T: Scalar>(x: &[T]) -> Result<T> {
    if x.len() < 3 {
        return Err(Error::Feature(format!(
            "mean second derivative needs 3 samples, got {}",
            x.len()
        )));
    }
    let two = T::from_f64_lossy(2.0);
    let s = x
        .windows(3)
        .fold(T::zero(), |a, w| a + (w[2] - two * w[1] + w[0]) / two);
    Ok(s / T::from_count(x.len() - 2))
}

pub fn count_above_mean<T: Scalar>(x: &[T]) -> usize {
    let mu = mean(x);
    x.iter().filter(|&&v| v > mu).count()
}

pub fn count_below_mean<T: Scalar>(x: &[T]) -> usize {
    let mu = mean(x);
    x.iter().filter(|&&v| v < mu).count()
}

fn longest_run(x: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &b in x {
        run = if b { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

pub fn longest_strike_above_mean<T: Scalar>(x: &[T]) -> usize {
    let mu = mean(x);
    longest_run(&x.iter().map(|&v| v > mu).collect::<Vec<_>>())
}

pub fn longest_strike_below_mean<T: Scalar>(x: &[T]) -> usize {
    let mu = mean(x);
    longest_run(&x.iter().map(|&v| v < mu).collect::<Vec<_>>())
}

fn location<T: Scalar>(idx: Option<usize>, len: usize, last: bool) -> T {
    match idx {
        Some(i) => T::from_count(i + usize::from(last)) / T::from_count(len),
        None => T::nan(),
    }
}

pub fn first_location_of_maximum<T: Scalar>(x: &[T]) -> T {
    let m = maximum(x);
    location(x.iter().position(|&v| v == m), x.len(), false)
}

pub fn first_location_of_minimum<T: Scalar>(x: &[T]) -> T {
    let m = minimum(x);
    location(x.iter().position(|&v| v == m), x.len(), false)
}

pub fn last_location_of_maximum<T: Scalar>(x: &[T]) -> T {
    let m = maximum(x);
    location(x.iter().rposition(|&v| v == m), x.len(), true)
}

pub fn last_location_of_minimum<T: Scalar>(x: &[T]) -> T {
    let m = minimum(x);
    location(x.iter().rposition(|&v| v == m), x.len(), true)
}

/// Occurrence count per exact bit pattern.
fn multiplicities<T: Scalar>(x: &[T]) -> HashMap<u64, usize> {
    let mut counts = HashMap::with_capacity(x.len());
    for &v in x {
        *counts.entry(v.bit_pattern()).or_insert(0) += 1;
    }
    counts
}

pub fn has_duplicate<T: Scalar>(x: &[T]) -> bool {
    multiplicities(x).values().any(|&c| c > 1)
}

pub fn has_duplicate_max<T: Scalar>(x: &[T]) -> bool {
    let m = maximum(x).bit_pattern();
    x.iter().filter(|v| v.bit_pattern() == m).count() > 1
}

pub fn has_duplicate_min<T: Scalar>(x: &[T]) -> bool {
    let m = minimum(x).bit_pattern();
    x.iter().filter(|v| v.bit_pattern() == m).count() > 1
}

/// `(sum of all samples whose value repeats, sum of each repeated value once)`.
pub fn reoccurring_sums<T: Scalar>(x: &[T]) -> (T, T) {
    let counts = multiplicities(x);
    let points = x
        .iter()
        .filter(|v| counts[&v.bit_pattern()] > 1)
        .fold(T::zero(), |a, &v| a + v);
    let mut seen = HashMap::new();
    let mut values = T::zero();
    for &v in x {
        let bits = v.bit_pattern();
        if counts[&bits] > 1 && seen.insert(bits, ()).is_none() {
            values += v;
        }
    }
    (points, values)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Benford first-digit probabilities for digits 1..=9.
pub fn benford_distribution() -> [f64; 9] {
    std::array::from_fn(|i| (1.0 + 1.0 / (i as f64 + 1.0)).log10())
}

/// Leading decimal digit of the shortest round-trip representation of |v|.
fn first_digit<T: Scalar>(v: T) -> Option<usize> {
    if v == T::zero() || !v.is_finite() {
        return None;
    }
    let s = format!("{:e}", v.abs());
    s.bytes().next().map(|b| (b - b'0') as usize)
}

/// Pearson correlation between the first-digit frequencies of |x| (zeros
/// excluded) and the Benford distribution. Zero when undefined.
pub fn benford_correlation<T: Scalar>(x: &[T]) -> T {
    let mut counts = [0.0f64; 9];
    let mut total = 0.0;
    for &v in x {
        if let Some(d) = first_digit(v) {
            counts[d - 1] += 1.0;
            total += 1.0;
        }
    }
    if total == 0.0 {
        return T::zero();
    }
    for c in &mut counts {
        *c /= total;
    }
    T::from_f64_lossy(pearson(&counts, &benford_distribution()))
}

/// Entropy (natural log) of the normalized one-sided periodogram, bins 1..=L/2.
pub fn spectral_entropy<T: Scalar>(x: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::nan();
    }
    if is_constant(x) {
        return T::zero();
    }
    let mu = mean(x);
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v - mu, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<T> = buf[1..=n / 2].iter().map(|c| c.norm_sqr()).collect();
    let total = sum_values(&power);
    if total == T::zero() {
        return T::zero();
    }
    power.iter().fold(T::zero(), |acc, &p| {
        let q = p / total;
        if q > T::zero() {
            acc - q * q.ln()
        } else {
            acc
        }
    })
}

pub fn energy<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &v| a + v * v)
}

pub fn power<T: Scalar>(x: &[T]) -> T {
    energy(x) / T::from_count(x.len())
}

fn flag<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

/// All features of one channel in [`Feature::ALL`] order, before imputation.
/// Undefined values come back as NaN.
pub fn raw_channel_features<T: Scalar>(x: &[T]) -> [T; FEATURES_PER_CHANNEL] {
    let (reoccurring_points, reoccurring_values) = reoccurring_sums(x);
    let count = |n: usize| T::from_count(n);
    [
        kurtosis(x),
        mean(x),
        standard_deviation(x),
        maximum(x),
        minimum(x),
        variance(x),
        skewness(x),
        median(x),
        variation_coefficient(x),
        absolute_sum_of_changes(x),
        benford_correlation(x),
        count(count_above_mean(x)),
        count(count_below_mean(x)),
        first_location_of_maximum(x),
        first_location_of_minimum(x),
        flag(has_duplicate(x)),
        flag(has_duplicate_max(x)),
        flag(has_duplicate_min(x)),
        last_location_of_maximum(x),
        last_location_of_minimum(x),
        count(longest_strike_above_mean(x)),
        count(longest_strike_below_mean(x)),
        mean_abs_change(x),
        mean_change(x),
        mean_second_derivative_central(x).unwrap_or_else(|_| T::nan()),
        reoccurring_points,
        reoccurring_values,
        sum_values(x),
        energy(x),
        power(x),
        spectral_entropy(x),
    ]
}

/// Identifies the window a feature row came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRef {
    pub trip_id: String,
    pub start_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
    pub window: WindowRef,
    pub feature_set: Arc<FeatureSet>,
    /// Column positions whose values were imputed.
    pub imputed: Vec<usize>,
}

pub fn extract_features<T: Scalar>(w: &Window<T>, fs: &Arc<FeatureSet>) -> Result<FeatureVector<T>> {
    let mut values = Vec::with_capacity(fs.width());
    let mut imputed = Vec::new();
    for &channel in fs.channels() {
        let x = w.values.get(&channel).ok_or_else(|| {
            Error::Feature(format!(
                "window {}@{} has no {channel} channel",
                w.trip_id, w.start_ms
            ))
        })?;
        for v in raw_channel_features(x) {
            if v.is_finite() {
                values.push(v);
            } else {
                imputed.push(values.len());
                values.push(T::zero());
            }
        }
    }
    Ok(FeatureVector {
        values,
        window: WindowRef {
            trip_id: w.trip_id.clone(),
            start_ms: w.start_ms,
        },
        feature_set: Arc::clone(fs),
        imputed,
    })
}

/// Rectangular feature table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Array2<T>,
    pub columns: Vec<String>,
    /// Row provenance; empty when the matrix was not built from windows.
    pub rows: Vec<WindowRef>,
    /// Imputed value count per column.
    pub imputed: Vec<usize>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(values: Array2<T>, columns: Vec<String>) -> Result<Self> {
        if values.ncols() != columns.len() {
            return Err(Error::Assembly(format!(
                "{} columns but {} names",
                values.ncols(),
                columns.len()
            )));
        }
        let imputed = vec![0; columns.len()];
        Ok(Self {
            values,
            columns,
            rows: Vec::new(),
            imputed,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn imputed_total(&self) -> usize {
        self.imputed.iter().sum()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), idx),
            columns: self.columns.clone(),
            rows: if self.rows.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.rows[i].clone()).collect()
            },
            imputed: self.imputed.clone(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(1), idx),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self.rows.clone(),
            imputed: idx.iter().map(|&i| self.imputed[i]).collect(),
        }
    }

    /// Column positions belonging to any of `channels`.
    pub fn columns_for_channels(&self, channels: &[ChannelKind]) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, name)| {
                name.split_once('.')
                    .and_then(|(c, _)| c.parse::<ChannelKind>().ok())
                    .is_some_and(|c| channels.contains(&c))
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV with a header of column names, plus a trailing `label` column when given.
    pub fn to_csv(&self, labels: Option<&[usize]>) -> Result<String> {
        if let Some(l) = labels {
            if l.len() != self.n_rows() {
                return Err(Error::Assembly(format!("{} labels for {} rows", l.len(), self.n_rows())));
            }
        }
        let mut out = self.columns.join(",");
        if labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, row) in self.values.outer_iter().enumerate() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&v.to_exact_string());
            }
            if let Some(l) = labels {
                out.push_str(&format!(",{}", l[i]));
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Inverse of [`FeatureMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<(Self, Option<Vec<usize>>)> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Data("feature CSV is empty".into()))?;
        let mut columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let labeled = columns.last().is_some_and(|c| c == "label");
        if labeled {
            columns.pop();
        }
        let width = columns.len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut n_rows = 0;
        for (i, line) in lines {
            let perr = |message: String| Error::Parse {
                path: "feature csv".into(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != width + usize::from(labeled) {
                return Err(perr(format!("expected {} fields, found {}", width + usize::from(labeled), fields.len())));
            }
            for f in &fields[..width] {
                data.push(f.parse::<T>().map_err(|_| perr(format!("invalid value `{f}`")))?);
            }
            if labeled {
                labels.push(fields[width].parse::<usize>().map_err(|_| perr(format!("invalid label `{}`", fields[width])))?);
            }
            n_rows += 1;
        }
        let values = Array2::from_shape_vec((n_rows, width), data).map_err(|e| Error::Assembly(e.to_string()))?;
        Ok((Self::new(values, columns)?, labeled.then_some(labels)))
    }
}

/// Stacks feature vectors into a matrix, zeroing any non-finite values.
pub fn impute_and_assemble<T: Scalar>(rows: Vec<FeatureVector<T>>) -> Result<FeatureMatrix<T>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Assembly("no feature rows to assemble".into()))?;
    let fs = Arc::clone(&first.feature_set);
    let width = fs.width();
    let mut imputed = vec![0usize; width];
    let mut data = Vec::with_capacity(rows.len() * width);
    let mut refs = Vec::with_capacity(rows.len());
    let n_rows = rows.len();
    for row in rows {
        if *row.feature_set != *fs {
            return Err(Error::Assembly("rows were extracted with different feature sets".into()));
        }
        if row.values.len() != width {
            return Err(Error::Assembly(format!("row width {} != {width}", row.values.len())));
        }
        for &c in &row.imputed {
            imputed[c] += 1;
        }
        for (c, v) in row.values.into_iter().enumerate() {
            if v.is_finite() {
                data.push(v);
            } else {
                imputed[c] += 1;
                data.push(T::zero());
            }
        }
        refs.push(row.window);
    }
    let values = Array2::from_shape_vec((n_rows, width), data).map_err(|e| Error::Assembly(e.to_string()))?;
    Ok(FeatureMatrix {
        values,
        columns: fs.column_names(),
        rows: refs,
        imputed,
    })
}
