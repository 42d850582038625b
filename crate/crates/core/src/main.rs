use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drivewear::config::RunConfig;
use drivewear::evaluation::{modality_ablation, permutation_importance, run_cv, AblationReport, EvalReport, ImportanceReport};
use drivewear::pipeline::{featurize_dir, load_feature_csv};
use drivewear::synth::{generate, write_dataset};
use drivewear::{Error, LabeledDatasetF64, Result};

#[derive(Parser, Debug)]
#[command(name = "drivewear", version, about = "Driver-context classification from smartwatch sensor logs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// inside_activity, outside_event or road_type.
    #[arg(long, global = true, value_name = "NAME")]
    category: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["none", "weights", "smote"])]
    balance: Option<String>,
    #[arg(long, global = true, value_parser = ["tree", "forest", "extra"])]
    model: Option<String>,
    /// Any config key, e.g. `--set n_trees=50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the labeled feature matrix and ingestion audit.
    Featurize(DataArgs),
    /// Stratified k-fold cross-validation report.
    Cv(DataArgs),
    /// Permutation feature importance on a stratified holdout.
    Importance(DataArgs),
    /// Cross-validation over cumulative channel groups.
    Ablate(DataArgs),
    /// Write a synthetic dataset of sensor logs and annotations.
    Synth,
    /// Summarize the reports found in the output directory.
    Report,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Directory of trip sensor logs and annotations.
    data_dir: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    let flags = [
        ("category", c.category.clone()),
        ("seed", c.seed.map(|s| s.to_string())),
        ("jobs", c.jobs.map(|j| j.to_string())),
        ("out", c.out.as_ref().map(|p| p.display().to_string())),
        ("balance", c.balance.clone()),
        ("model", c.model.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Command::Featurize(a) | Command::Cv(a) | Command::Importance(a) | Command::Ablate(a) = &cli.command {
        if let Some(d) = &a.data_dir {
            cfg.data_dir = Some(d.clone());
        }
    }
    Ok(cfg)
}

fn write_output(cfg: &RunConfig, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    let path = cfg.out.join(name);
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn stem(cfg: &RunConfig) -> &'static str {
    cfg.category.file_stem()
}

fn dataset(cfg: &RunConfig) -> Result<LabeledDatasetF64> {
    let taxonomy = cfg.taxonomy()?;
    if let Some(path) = &cfg.features {
        let data = load_feature_csv(path, &taxonomy)?;
        let cols = data.matrix.columns_for_channels(&cfg.channels);
        return Ok(data.select_columns(&cols));
    }
    let dir = cfg
        .data_dir
        .as_ref()
        .ok_or_else(|| Error::Config("no data directory given (positional argument or `data_dir` key)".into()))?;
    Ok(featurize_dir(dir, &taxonomy, &cfg.sampling, &cfg.window, &cfg.feature_set()?)?.0)
}

fn cmd_featurize(cfg: &RunConfig) -> Result<String> {
    let dir = cfg
        .data_dir
        .as_ref()
        .ok_or_else(|| Error::Config("no data directory given".into()))?;
    let (data, audit) = featurize_dir::<f64>(dir, &cfg.taxonomy()?, &cfg.sampling, &cfg.window, &cfg.feature_set()?)?;
    write_output(cfg, &format!("features_{}.csv", stem(cfg)), &data.to_csv()?)?;
    write_output(cfg, &format!("audit_{}.json", stem(cfg)), &audit.to_json()?)?;
    Ok(format!(
        "featurized {} windows x {} features from {} trips ({} imputed values)",
        data.len(),
        data.matrix.n_cols(),
        audit.trips.len(),
        audit.imputed_total
    ))
}

fn cmd_cv(cfg: &RunConfig) -> Result<String> {
    let data = dataset(cfg)?;
    let report = run_cv(&data, &cfg.forest_params(), &cfg.cv_spec())?;
    write_output(cfg, &format!("cv_{}.json", stem(cfg)), &report.to_json()?)?;
    write_output(cfg, &format!("confusion_{}.csv", stem(cfg)), &report.confusion_csv())?;
    Ok(format!(
        "weighted F1 {:.4} +/- {:.4} over {} folds",
        report.mean_f1,
        report.sd_f1,
        report.per_fold_f1.len()
    ))
}

fn cmd_importance(cfg: &RunConfig) -> Result<String> {
    let data = dataset(cfg)?;
    let report = permutation_importance(&data, &cfg.forest_params(), &cfg.importance_spec())?;
    write_output(cfg, &format!("importance_{}.json", stem(cfg)), &report.to_json()?)?;
    Ok(format!(
        "baseline F1 {:.4}; top feature {}",
        report.baseline_f1,
        report.ranking.first().map(String::as_str).unwrap_or("-")
    ))
}

fn cmd_ablate(cfg: &RunConfig) -> Result<String> {
    let data = dataset(cfg)?;
    let report = modality_ablation(&data, &cfg.forest_params(), &cfg.cv_spec(), &cfg.ablation_groups)?;
    write_output(cfg, &format!("ablation_{}.json", stem(cfg)), &report.to_json()?)?;
    let mut s = String::new();
    for e in &report.entries {
        let _ = writeln!(s, "{:>3} channels  F1 {:.4} +/- {:.4}", e.channels.len(), e.mean_f1, e.sd_f1);
    }
    Ok(s.trim_end().to_string())
}

fn cmd_synth(cfg: &RunConfig) -> Result<String> {
    let trips = generate::<f64>(&cfg.synth_spec()?)?;
    write_dataset(&cfg.out, &trips)?;
    let samples: usize = trips.iter().map(|t| t.trip.len()).sum();
    Ok(format!("wrote {} synthetic trips ({samples} samples per channel in total)", trips.len()))
}

fn read_report<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<R>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let cv_path = cfg.out.join(format!("cv_{}.json", stem(cfg)));
    let cv: EvalReport = read_report(&cv_path)?.ok_or(Error::MissingInput(cv_path))?;
    let importance: Option<ImportanceReport> = read_report(&cfg.out.join(format!("importance_{}.json", stem(cfg))))?;
    let ablation: Option<AblationReport> = read_report(&cfg.out.join(format!("ablation_{}.json", stem(cfg))))?;

    let mut s = String::new();
    let _ = writeln!(s, "category: {}", stem(cfg));
    let _ = writeln!(
        s,
        "model: {} trees, bootstrap {}, {:?} splits; balance {:?}",
        cv.model.n_trees, cv.model.bootstrap, cv.model.tree.split_mode, cv.cv.balance.mode
    );
    let _ = writeln!(s, "windows: {} in {} folds", cv.n_samples, cv.cv.k);
    let _ = writeln!(s, "weighted F1: {:.4} +/- {:.4}", cv.mean_f1, cv.sd_f1);
    let _ = writeln!(s, "macro F1:    {:.4} +/- {:.4}", cv.mean_macro_f1, cv.sd_macro_f1);
    if !cv.flagged_folds.is_empty() {
        let _ = writeln!(s, "flagged folds: {:?}", cv.flagged_folds);
    }
    let _ = writeln!(s, "\n{:<24} {:>8} {:>8}", "class", "support", "F1");
    for (i, c) in cv.classes.iter().enumerate() {
        let _ = writeln!(s, "{:<24} {:>8} {:>8.4}", c, cv.class_support.0[i], cv.per_class_f1[i]);
    }
    if let Some(imp) = importance {
        let _ = writeln!(s, "\nimportance (baseline F1 {:.4}), top 10:", imp.baseline_f1);
        for name in imp.ranking.iter().take(10) {
            let f = imp.features.iter().find(|f| &f.feature == name).expect("ranked feature");
            let _ = writeln!(s, "  {:<40} {:>8.4} +/- {:.4}", f.feature, f.mean_drop, f.sd_drop);
        }
    }
    if let Some(abl) = ablation {
        let _ = writeln!(s, "\nablation:");
        for e in &abl.entries {
            let names: Vec<&str> = e.channels.iter().map(|c| c.name()).collect();
            let _ = writeln!(s, "  F1 {:.4} +/- {:.4}  {}", e.mean_f1, e.sd_f1, names.join(","));
        }
    }
    write_output(cfg, &format!("report_{}.txt", stem(cfg)), &s)?;
    Ok(s.trim_end().to_string())
}

fn run(cli: &Cli) -> Result<String> {
    let cfg = build_config(cli)?;
    let body = || match cli.command {
        Command::Featurize(_) => cmd_featurize(&cfg),
        Command::Cv(_) => cmd_cv(&cfg),
        Command::Importance(_) => cmd_importance(&cfg),
        Command::Ablate(_) => cmd_ablate(&cfg),
        Command::Synth => cmd_synth(&cfg),
        Command::Report => cmd_report(&cfg),
    };
    match cfg.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            pool.install(body)
        }
        None => body(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
