//! Cross-validation, F1 and confusion reporting, permutation importance and
//! modality ablation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{class_weights, smote_oversample, BalanceMode, BalanceSpec};
use crate::dataset::{ClassSupport, LabeledDataset};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::forest::{fit_forest_on, ForestParams};
use crate::ingest::ChannelKind;
use crate::scalar::Scalar;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub k: usize,
    pub seed: u64,
    pub balance: BalanceSpec,
}

impl Default for CvSpec {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            balance: BalanceSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub folds: Vec<Fold>,
    /// Classes with fewer samples than folds.
    pub small_classes: Vec<usize>,
}

/// Splits sample indices into `k` folds preserving class proportions.
///
/// Each class is shuffled and dealt round-robin; the dealing position carries
/// over between classes so fold sizes also stay within one of each other.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Eval(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut small_classes = Vec::new();
    let mut position = 0;
    for (&class, members) in &mut by_class {
        if members.len() < k {
            small_classes.push(class);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64);
        members.shuffle(&mut rng);
        for &i in members.iter() {
            tests[position % k].push(i);
            position += 1;
        }
    }
    let folds = tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let in_test: BTreeSet<usize> = test.iter().copied().collect();
            let train = (0..labels.len()).filter(|i| !in_test.contains(i)).collect();
            Fold { train, test }
        })
        .collect();
    Ok(FoldAssignment { folds, small_classes })
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Self {
        let mut cm = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.counts[t][p] += 1;
        }
        cm
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Row fractions; rows without support stay zero and are listed separately.
    pub fn row_normalized(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut empty = Vec::new();
        let rows = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let s: u64 = row.iter().sum();
                if s == 0 {
                    empty.push(i);
                    vec![0.0; row.len()]
                } else {
                    row.iter().map(|&c| c as f64 / s as f64).collect()
                }
            })
            .collect();
        (rows, empty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub per_class: Vec<f64>,
    /// Unweighted mean over classes that occur in the truth or the predictions.
    pub macro_f1: f64,
    /// Support-weighted mean.
    pub weighted_f1: f64,
}

pub fn f1_scores(cm: &ConfusionMatrix) -> F1Scores {
    let n = cm.n_classes();
    let mut per_class = vec![0.0; n];
    let mut macro_sum = 0.0;
    let mut macro_n = 0usize;
    let mut weighted = 0.0;
    let total = cm.total() as f64;
    for c in 0..n {
        let tp = cm.counts[c][c] as f64;
        let support: f64 = cm.counts[c].iter().sum::<u64>() as f64;
        let predicted: f64 = (0..n).map(|r| cm.counts[r][c]).sum::<u64>() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0.0 { tp / support } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class[c] = f1;
        if support > 0.0 || predicted > 0.0 {
            macro_sum += f1;
            macro_n += 1;
        }
        if total > 0.0 {
            weighted += f1 * support / total;
        }
    }
    F1Scores {
        per_class,
        macro_f1: if macro_n > 0 { macro_sum / macro_n as f64 } else { 0.0 },
        weighted_f1: weighted,
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Training rows after balancing, plus model parameters with any class weights set.
struct Balanced<T> {
    values: ndarray::Array2<T>,
    labels: Vec<usize>,
    params: ForestParams,
    replicated_classes: usize,
}

fn balance_training<T: Scalar>(
    train: &LabeledDataset<T>,
    model: &ForestParams,
    balance: &BalanceSpec,
    seed: u64,
) -> Result<Balanced<T>> {
    let mut params = model.clone();
    match balance.mode {
        BalanceMode::None => Ok(Balanced {
            values: train.matrix.values.clone(),
            labels: train.labels.clone(),
            params,
            replicated_classes: 0,
        }),
        BalanceMode::ClassWeights => {
            params.class_weights = Some(class_weights(&train.labels)?);
            Ok(Balanced {
                values: train.matrix.values.clone(),
                labels: train.labels.clone(),
                params,
                replicated_classes: 0,
            })
        }
        BalanceMode::Smote => {
            let spec = BalanceSpec { seed, ..*balance };
            let out = smote_oversample(&train.matrix.values, &train.labels, &spec)?;
            Ok(Balanced {
                values: out.values,
                labels: out.labels,
                params,
                replicated_classes: out.replicated_classes.len(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    /// Training rows after balancing.
    pub n_train_balanced: usize,
    pub n_test: usize,
    pub weighted_f1: f64,
    pub macro_f1: f64,
    /// Set when the training split lacks a class present in the dataset.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub classes: Vec<String>,
    pub model: ForestParams,
    pub cv: CvSpec,
    pub n_samples: usize,
    pub class_support: ClassSupport,
    pub folds: Vec<FoldResult>,
    /// Weighted F1 of each unflagged fold.
    pub per_fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Sample standard deviation across folds.
    pub sd_f1: f64,
    pub mean_macro_f1: f64,
    pub sd_macro_f1: f64,
    /// Per-class F1 of the summed confusion matrix.
    pub per_class_f1: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub row_normalized: Vec<Vec<f64>>,
    pub zero_support_classes: Vec<usize>,
    pub small_classes: Vec<usize>,
    pub flagged_folds: Vec<usize>,
    pub imputed_values: usize,
    /// Fold-class pairs oversampled by replication.
    pub smote_replications: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Row-normalized confusion matrix as CSV, true classes down the side.
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.row_normalized) {
            s.push_str(c);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

struct FoldOutcome {
    result: FoldResult,
    confusion: ConfusionMatrix,
    replications: usize,
}

/// Stratified k-fold cross-validation. Balancing is fit on each training split only.
pub fn run_cv<T: Scalar>(data: &LabeledDataset<T>, model: &ForestParams, spec: &CvSpec) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Eval("cannot cross-validate an empty dataset".into()));
    }
    let n_classes = data.n_classes();
    let assignment = stratified_kfold(&data.labels, spec.k, spec.seed)?;
    let present: BTreeSet<usize> = data.labels.iter().copied().collect();

    let outcomes = assignment
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| -> Result<FoldOutcome> {
            let train = data.select_rows(&fold.train);
            let test = data.select_rows(&fold.test);
            let train_classes: BTreeSet<usize> = train.labels.iter().copied().collect();
            let flagged = train_classes != present;
            let balanced = balance_training(&train, model, &spec.balance, derive_seed(spec.balance.seed, i as u64))?;
            let mut params = balanced.params;
            params.seed = derive_seed(model.seed, i as u64);
            let forest = fit_forest_on(
                balanced.values.view(),
                &data.matrix.columns,
                &balanced.labels,
                n_classes,
                &params,
            )?;
            let predicted = forest.predict_rows(test.matrix.values.view())?;
            let confusion = ConfusionMatrix::from_predictions(&test.labels, &predicted, n_classes);
            let scores = f1_scores(&confusion);
            Ok(FoldOutcome {
                result: FoldResult {
                    fold: i,
                    n_train: train.len(),
                    n_train_balanced: balanced.labels.len(),
                    n_test: test.len(),
                    weighted_f1: scores.weighted_f1,
                    macro_f1: scores.macro_f1,
                    flagged,
                },
                confusion,
                replications: balanced.replicated_classes,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = ConfusionMatrix::new(n_classes);
    let mut per_fold_f1 = Vec::new();
    let mut per_fold_macro = Vec::new();
    let mut flagged_folds = Vec::new();
    let mut smote_replications = 0;
    for o in &outcomes {
        smote_replications += o.replications;
        if o.result.flagged {
            flagged_folds.push(o.result.fold);
            continue;
        }
        confusion.add(&o.confusion);
        per_fold_f1.push(o.result.weighted_f1);
        per_fold_macro.push(o.result.macro_f1);
    }
    let (mean_f1, sd_f1) = mean_sd(&per_fold_f1);
    let (mean_macro_f1, sd_macro_f1) = mean_sd(&per_fold_macro);
    let (row_normalized, zero_support_classes) = confusion.row_normalized();
    let mut model = model.clone();
    model.class_weights = None;
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        classes: data.taxonomy.classes.clone(),
        model,
        cv: *spec,
        n_samples: data.len(),
        class_support: ClassSupport::of(&data.labels, n_classes),
        folds: outcomes.into_iter().map(|o| o.result).collect(),
        per_fold_f1,
        mean_f1,
        sd_f1,
        mean_macro_f1,
        sd_macro_f1,
        per_class_f1: f1_scores(&confusion).per_class,
        confusion,
        row_normalized,
        zero_support_classes,
        small_classes: assignment.small_classes,
        flagged_folds,
        imputed_values: data.matrix.imputed_total(),
        smote_replications,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSpec {
    pub holdout_fraction: f64,
    /// Permutations per feature.
    pub repeats: usize,
    pub seed: u64,
    pub balance: BalanceSpec,
}

impl Default for ImportanceSpec {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.2,
            repeats: 10,
            seed: 0,
            balance: BalanceSpec {
                mode: BalanceMode::Smote,
                ..BalanceSpec::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean decrease in weighted F1 over the permutations.
    pub mean_drop: f64,
    pub sd_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub schema_version: u32,
    pub spec: ImportanceSpec,
    pub n_train: usize,
    pub n_holdout: usize,
    pub baseline_f1: f64,
    /// In column order.
    pub features: Vec<FeatureImportance>,
    /// Feature names by decreasing mean drop.
    pub ranking: Vec<String>,
}

impl ImportanceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per class, a shuffled `round(n_c * fraction)` share goes to the holdout,
/// always leaving at least one training sample.
pub fn stratified_holdout(labels: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Eval(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (&class, members) in &mut by_class {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64);
        members.shuffle(&mut rng);
        let h = ((members.len() as f64 * fraction).round() as usize).min(members.len() - 1);
        holdout.extend_from_slice(&members[..h]);
        train.extend_from_slice(&members[h..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

/// FNV-1a; keys per-feature random streams by column name.
fn name_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Decrease in holdout weighted F1 when each column is permuted.
///
/// Permutations of a column depend only on its name and the seed, so
/// reordering columns reorders the report without changing it.
pub fn permutation_importance<T: Scalar>(
    data: &LabeledDataset<T>,
    model: &ForestParams,
    spec: &ImportanceSpec,
) -> Result<ImportanceReport> {
    if spec.repeats == 0 {
        return Err(Error::Eval("repeats must be at least 1".into()));
    }
    let n_classes = data.n_classes();
    let (train_idx, holdout_idx) = stratified_holdout(&data.labels, spec.holdout_fraction, spec.seed)?;
    if holdout_idx.is_empty() {
        return Err(Error::Eval("holdout split is empty".into()));
    }
    let train = data.select_rows(&train_idx);
    let holdout = data.select_rows(&holdout_idx);
    let balanced = balance_training(&train, model, &spec.balance, derive_seed(spec.balance.seed, 0))?;
    let forest = fit_forest_on(
        balanced.values.view(),
        &data.matrix.columns,
        &balanced.labels,
        n_classes,
        &balanced.params,
    )?;
    let score = |x: ndarray::ArrayView2<'_, T>| -> Result<f64> {
        let predicted = forest.predict_rows(x)?;
        Ok(f1_scores(&ConfusionMatrix::from_predictions(&holdout.labels, &predicted, n_classes)).weighted_f1)
    };
    let baseline = score(holdout.matrix.values.view())?;

    let features = data
        .matrix
        .columns
        .par_iter()
        .enumerate()
        .map(|(j, name)| -> Result<FeatureImportance> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, name_hash(name)));
            let mut x = holdout.matrix.values.clone();
            let original: Vec<T> = x.column(j).to_vec();
            let mut drops = Vec::with_capacity(spec.repeats);
            for _ in 0..spec.repeats {
                let mut col = original.clone();
                col.shuffle(&mut rng);
                x.column_mut(j).iter_mut().zip(&col).for_each(|(d, &s)| *d = s);
                drops.push(baseline - score(x.view())?);
            }
            let (mean_drop, sd_drop) = mean_sd(&drops);
            Ok(FeatureImportance {
                feature: name.clone(),
                mean_drop,
                sd_drop,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[b].mean_drop.total_cmp(&features[a].mean_drop).then(a.cmp(&b)));
    Ok(ImportanceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        spec: *spec,
        n_train: train.len(),
        n_holdout: holdout.len(),
        baseline_f1: baseline,
        ranking: order.iter().map(|&i| features[i].feature.clone()).collect(),
        features,
    })
}

/// Cumulative sensor groups: accelerometer, then gyroscope, HR, PPG, light, noise.
pub fn default_modality_groups() -> Vec<Vec<ChannelKind>> {
    use ChannelKind::*;
    vec![
        vec![AccelX, AccelY, AccelZ, AccelMag],
        vec![GyroX, GyroY, GyroZ, GyroMag],
        vec![Hr],
        vec![Ppg],
        vec![Light],
        vec![Noise],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub channels: Vec<ChannelKind>,
    pub n_columns: usize,
    pub mean_f1: f64,
    pub sd_f1: f64,
    pub mean_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub schema_version: u32,
    pub model: ForestParams,
    pub cv: CvSpec,
    pub entries: Vec<AblationEntry>,
}

impl AblationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Cross-validates on the columns of each cumulative union of `groups`.
pub fn modality_ablation<T: Scalar>(
    data: &LabeledDataset<T>,
    model: &ForestParams,
    spec: &CvSpec,
    groups: &[Vec<ChannelKind>],
) -> Result<AblationReport> {
    let mut channels: Vec<ChannelKind> = Vec::new();
    let mut entries = Vec::with_capacity(groups.len());
    for group in groups {
        for &c in group {
            if !channels.contains(&c) {
                channels.push(c);
            }
        }
        if channels.is_empty() {
            return Err(Error::Eval("ablation step has an empty channel set".into()));
        }
        let cols = data.matrix.columns_for_channels(&channels);
        if cols.is_empty() {
            return Err(Error::Eval(format!("no feature columns for channels {channels:?}")));
        }
        let subset = data.select_columns(&cols);
        let report = run_cv(&subset, model, spec)?;
        entries.push(AblationEntry {
            channels: channels.clone(),
            n_columns: cols.len(),
            mean_f1: report.mean_f1,
            sd_f1: report.sd_f1,
            mean_macro_f1: report.mean_macro_f1,
        });
    }
    let mut model = model.clone();
    model.class_weights = None;
    Ok(AblationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model,
        cv: *spec,
        entries,
    })
}
