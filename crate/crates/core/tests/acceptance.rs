//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{close, library_features, naive_dft, oracle_features, random_window, synth_dataset};
use drivewear::balance::{smote_oversample, BalanceMode, BalanceSpec};
use drivewear::evaluation::{modality_ablation, permutation_importance, run_cv, stratified_kfold, CvSpec, ImportanceSpec};
use drivewear::features::{energy, Feature, FeatureMatrix};
use drivewear::forest::{ForestParams, ModelKind};
use drivewear::ingest::ChannelKind;
use drivewear::labeling::{Category, Taxonomy};
use drivewear::synth::{ChannelProfile, SynthSpec};
use drivewear::LabeledDatasetF64;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn forest(seed: u64, n_trees: usize) -> ForestParams {
    let mut p = ModelKind::Forest.params(seed);
    p.n_trees = n_trees;
    p
}

fn feature_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let windows: Vec<Vec<f64>> = (0..1000).map(|_| random_window(&mut rng, 3, 100)).collect();
    let start = Instant::now();
    let got: Vec<Vec<f64>> = windows.iter().map(|w| library_features(w)).collect();
    let lib_secs = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut floor_only = 0usize;
    for (w, g) in windows.iter().zip(&got) {
        let want = oracle_features(w);
        for (i, f) in Feature::ALL.iter().enumerate() {
            if !close(g[i], want[i], 1e-9, 1e-12) {
                return Err(format!("{} differs: {} vs oracle {} (len {})", f.name(), g[i], want[i], w.len()));
            }
            let diff = (g[i] - want[i]).abs();
            let scale = g[i].abs().max(want[i].abs());
            if diff > 1e-9 * scale {
                floor_only += 1;
            } else if scale > 0.0 {
                worst = worst.max(diff / scale);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    if lib_secs >= 10.0 {
        return Err(format!("extraction took {lib_secs:.2} s"));
    }
    Ok(format!(
        "1000 windows, worst relative error {worst:.1e}, {floor_only} values within the 1e-12 absolute floor only, extraction {lib_secs:.3} s (with oracle {total:.2} s)"
    ))
}

fn parseval() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_window(&mut rng, 3, 100);
        let freq = naive_dft(&x).iter().map(|(re, im)| re * re + im * im).sum::<f64>() / x.len() as f64;
        let time = energy(&x);
        let rel = (time - freq).abs() / time.abs().max(freq.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(if time == freq { 0.0 } else { rel });
        if rel > 1e-6 {
            return Err(format!("energy {time} vs spectral {freq}"));
        }
    }
    Ok(format!("100 windows, worst relative error {worst:.1e}"))
}

fn smote_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut synthetic = 0usize;
    for case in 0..500 {
        let n_classes = rng.random_range(2..=4);
        let d = rng.random_range(1..=6);
        let counts: Vec<usize> = (0..n_classes).map(|_| rng.random_range(1..=40)).collect();
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let x: Array2<f64> = Array2::from_shape_fn((labels.len(), d), |_| rng.random_range(-100.0..100.0));
        let spec = BalanceSpec {
            mode: BalanceMode::Smote,
            smote_k: rng.random_range(1..=6),
            seed: case,
        };
        let out = smote_oversample(&x, &labels, &spec).map_err(|e| e.to_string())?;
        let target = *counts.iter().max().unwrap();
        let mut got = vec![0usize; n_classes];
        for &l in &out.labels {
            got[l] += 1;
        }
        if got.iter().any(|&c| c != target) {
            return Err(format!("case {case}: class counts {got:?}, expected {target} each"));
        }
        let n = labels.len();
        for (s, prov) in out.synthetic.iter().enumerate() {
            let row = out.values.row(n + s);
            let (b, q) = (x.row(prov.base), x.row(prov.neighbor));
            if labels[prov.base] != prov.class || labels[prov.neighbor] != prov.class || out.labels[n + s] != prov.class {
                return Err(format!("case {case}: synthetic row {s} mixes classes"));
            }
            // Recover the interpolation parameter from the widest coordinate.
            let j = (0..d).max_by(|&i, &k| (q[i] - b[i]).abs().total_cmp(&(q[k] - b[k]).abs())).unwrap();
            let span = q[j] - b[j];
            let t = if span == 0.0 { 0.0 } else { (row[j] - b[j]) / span };
            if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                return Err(format!("case {case}: synthetic row {s} outside segment (t = {t})"));
            }
            for i in 0..d {
                let expect = b[i] + t * (q[i] - b[i]);
                let scale = 1.0 + b[i].abs().max(q[i].abs());
                if (row[i] - expect).abs() > 1e-9 * scale {
                    return Err(format!("case {case}: synthetic row {s} not collinear in column {i}"));
                }
            }
            synthetic += 1;
        }
    }
    Ok(format!("500 datasets, {synthetic} synthetic points on their segments, counts equalized"))
}

fn pipeline_sanity() -> Outcome {
    let start = Instant::now();
    let spec = SynthSpec::standard(Taxonomy::standard(Category::RoadType), 10.0, 24, 4);
    let data = synth_dataset(&spec, &ChannelKind::ALL);
    let support = drivewear::dataset::ClassSupport::of(&data.labels, data.n_classes());
    if data.n_classes() != 5 || support.0.iter().any(|&c| c < 200) {
        return Err(format!("class support {:?}", support.0));
    }
    let report = run_cv(&data, &forest(4, 100), &CvSpec { k: 10, seed: 4, ..CvSpec::default() }).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("weighted F1 {:.4} +/- {:.4}, support {:?}, {secs:.1} s", report.mean_f1, report.sd_f1, support.0);
    if report.mean_f1 >= 0.95 && secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Two classes whose difference is spread thinly over four channels (0.6
/// noise SD each), minority thinned to 1:50.
fn imbalanced_dataset() -> LabeledDatasetF64 {
    let channels = [ChannelKind::Hr, ChannelKind::Ppg, ChannelKind::Light, ChannelKind::Noise];
    let taxonomy = Taxonomy::custom(Category::InsideActivity, vec!["common".into(), "rare".into()]).unwrap();
    let base = ChannelProfile {
        baseline: 0.0,
        amplitude: 1.0,
        frequency_hz: 1.0,
        noise_sd: 1.0,
    };
    let mut spec = SynthSpec::uniform(taxonomy, base, 160, 5);
    for ch in &channels {
        spec.classes[1].channels.get_mut(ch).unwrap().baseline = 0.6;
    }
    let data = synth_dataset(&spec, &channels);
    let majority: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 0).collect();
    let mut minority: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 1).collect();
    minority.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    minority.truncate(majority.len() / 50);
    let mut rows: Vec<usize> = majority.into_iter().chain(minority).collect();
    rows.sort_unstable();
    data.select_rows(&rows)
}

fn smote_benefit() -> Outcome {
    let data = imbalanced_dataset();
    let rare = data.labels.iter().filter(|&&l| l == 1).count();
    let minority_f1 = |mode| -> Result<f64, String> {
        let spec = CvSpec {
            k: 10,
            seed: 5,
            balance: BalanceSpec {
                mode,
                smote_k: 5,
                seed: 5,
            },
        };
        let r = run_cv(&data, &forest(5, 100), &spec).map_err(|e| e.to_string())?;
        Ok(r.per_class_f1[1])
    };
    let base = minority_f1(BalanceMode::None)?;
    let smote = minority_f1(BalanceMode::Smote)?;
    let detail = format!(
        "{} vs {rare} windows, minority F1 {base:.4} -> {smote:.4} (gain {:.4})",
        data.len() - rare,
        smote - base
    );
    if smote - base >= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ablation_shape() -> Outcome {
    let channels = [ChannelKind::Hr, ChannelKind::Ppg, ChannelKind::Light, ChannelKind::Noise];
    let names: Vec<String> = (0..5).map(|c| format!("c{c}")).collect();
    let taxonomy = Taxonomy::custom(Category::InsideActivity, names).unwrap();
    let base = ChannelProfile {
        baseline: 0.0,
        amplitude: 1.0,
        frequency_hz: 1.0,
        noise_sd: 1.0,
    };
    let mut spec = SynthSpec::uniform(taxonomy, base, 10, 7);
    for (k, ch) in channels.iter().enumerate() {
        spec.classes[k + 1].channels.get_mut(ch).unwrap().baseline = 10.0;
    }
    let data = synth_dataset(&spec, &channels);
    let groups: Vec<Vec<ChannelKind>> = channels.iter().map(|&c| vec![c]).collect();
    let report = modality_ablation(&data, &forest(7, 50), &CvSpec { k: 10, seed: 7, ..CvSpec::default() }, &groups)
        .map_err(|e| e.to_string())?;
    let steps: Vec<String> = report.entries.iter().map(|e| format!("{:.3}+/-{:.3}", e.mean_f1, e.sd_f1)).collect();
    for w in report.entries.windows(2) {
        let margin = w[0].sd_f1.max(w[1].sd_f1);
        if w[1].mean_f1 - w[0].mean_f1 <= margin {
            return Err(format!("not a staircase: {}", steps.join(" -> ")));
        }
    }
    Ok(steps.join(" -> "))
}

fn importance_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 600;
    let columns: Vec<String> = ["noise_a", "noise_b", "planted", "noise_c", "constant", "noise_d"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut values = Array2::<f64>::zeros((n, columns.len()));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..columns.len() {
            values[[i, j]] = match columns[j].as_str() {
                "constant" => 3.5,
                _ => rng.random_range(-1.0..1.0),
            };
        }
        labels.push(usize::from(values[[i, 2]] > 0.0));
    }
    let matrix = FeatureMatrix::new(values, columns).map_err(|e| e.to_string())?;
    let taxonomy = Taxonomy::custom(Category::InsideActivity, vec!["low".into(), "high".into()]).unwrap();
    let data = LabeledDatasetF64::new(matrix, labels, taxonomy).map_err(|e| e.to_string())?;
    let spec = ImportanceSpec {
        seed: 8,
        ..ImportanceSpec::default()
    };
    let report = permutation_importance(&data, &forest(8, 50), &spec).map_err(|e| e.to_string())?;
    let constant = report.features.iter().find(|f| f.feature == "constant").unwrap().mean_drop;
    let planted = report.features.iter().find(|f| f.feature == "planted").unwrap().mean_drop;
    let detail = format!("top `{}` (drop {planted:.4}), constant drop {constant:.4}", report.ranking[0]);
    if report.ranking[0] == "planted" && constant.abs() <= 0.005 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chance_control() -> Outcome {
    let taxonomy = Taxonomy::custom(Category::OutsideEvent, vec!["a".into(), "b".into()]).unwrap();
    let spec = SynthSpec::standard(taxonomy, 10.0, 40, 9);
    let mut data = synth_dataset(&spec, &[ChannelKind::Hr, ChannelKind::Light]);
    let counts = drivewear::dataset::ClassSupport::of(&data.labels, 2);
    data.labels.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let report = run_cv(&data, &forest(9, 100), &CvSpec { k: 10, seed: 9, ..CvSpec::default() }).map_err(|e| e.to_string())?;
    let detail = format!("support {:?}, shuffled-label F1 {:.4} +/- {:.4}", counts.0, report.mean_f1, report.sd_f1);
    if (0.4..=0.6).contains(&report.mean_f1) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 6] = [
        &["synth", "--out", "data"],
        &["featurize", "data", "--out", "out"],
        &["cv", "data", "--out", "out", "--balance", "smote"],
        &["importance", "data", "--out", "out", "--set", "repeats=3"],
        &["ablate", "data", "--out", "out", "--model", "extra"],
        &["report", "--out", "out"],
    ];
    let common = ["--category", "road_type", "--seed", "17", "--set", "synth.events_per_class=6", "--set", "n_trees=20"];
    let mut trees = Vec::new();
    for jobs in ["1", "8"] {
        let root = tmp.path().join(format!("jobs{jobs}"));
        fs::create_dir_all(&root).unwrap();
        let mut stdout = Vec::new();
        for cmd in commands {
            let o = Command::new(env!("CARGO_BIN_EXE_drivewear"))
                .args(cmd)
                .args(common)
                .args(["--jobs", jobs])
                .current_dir(&root)
                .output()
                .map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("`{}` failed: {}", cmd[0], String::from_utf8_lossy(&o.stderr)));
            }
            stdout.extend(o.stdout);
        }
        let mut tree = read_tree(&root);
        tree.insert("<stdout>".into(), stdout);
        trees.push(tree);
    }
    if trees[0].keys().ne(trees[1].keys()) {
        return Err("different output file sets".into());
    }
    for (name, bytes) in &trees[0] {
        if &trees[1][name] != bytes {
            return Err(format!("{name} differs between --jobs 1 and --jobs 8"));
        }
    }
    Ok(format!("{} outputs byte-identical across 6 commands", trees[0].len()))
}

fn stratification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..100u64 {
        let n = rng.random_range(20..400);
        let n_classes = rng.random_range(2..=8);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let k = rng.random_range(2..=10);
        let folds = stratified_kfold(&labels, k, case).map_err(|e| e.to_string())?;
        for c in 0..n_classes {
            let per_fold: Vec<usize> = folds
                .folds
                .iter()
                .map(|f| f.test.iter().filter(|&&i| labels[i] == c).count())
                .collect();
            let spread = per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap();
            if spread > 1 {
                return Err(format!("case {case}: class {c} fold counts {per_fold:?}"));
            }
        }
        let mut seen = vec![0usize; n];
        for f in &folds.folds {
            for &i in &f.test {
                seen[i] += 1;
            }
        }
        if seen.iter().any(|&s| s != 1) {
            return Err(format!("case {case}: folds do not partition the samples"));
        }
    }
    Ok("100 label vectors, per-class fold counts within 1".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("feature oracle", feature_oracle),
        ("parseval", parseval),
        ("smote geometry", smote_geometry),
        ("pipeline sanity", pipeline_sanity),
        ("smote benefit", smote_benefit),
        ("ablation shape", ablation_shape),
        ("importance sanity", importance_sanity),
        ("chance control", chance_control),
        ("determinism", cli_determinism),
        ("stratification", stratification),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
