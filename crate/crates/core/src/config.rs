//! Run configuration from a flat `key = value` file.
//!
//! ```text
//! # comment
//! category = inside_activity
//! channels = accel_x, accel_y, hr
//! model = forest
//! n_trees = 200
//! ```
//!
//! Keys not given keep their defaults. [`RunConfig::set`] applies one
//! assignment, which is how command-line flags override file values.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::balance::{BalanceMode, BalanceSpec};
use crate::error::{Error, Result};
use crate::evaluation::{default_modality_groups, CvSpec, ImportanceSpec};
use crate::features::FeatureSet;
use crate::forest::{ForestParams, ModelKind};
use crate::ingest::{read_text, ChannelKind, SamplingSpec};
use crate::labeling::{Category, Taxonomy};
use crate::synth::SynthSpec;
use crate::windowing::WindowSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSettings {
    pub separation: f64,
    pub events_per_class: usize,
    pub trips: usize,
    pub event_min: f64,
    pub event_max: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            separation: 10.0,
            events_per_class: 40,
            trips: 2,
            event_min: 4.0,
            event_max: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    /// Precomputed feature CSV; when set, commands skip featurization.
    pub features: Option<PathBuf>,
    pub out: PathBuf,
    pub category: Category,
    /// Overrides the category's standard class list.
    pub classes: Option<Vec<String>>,
    pub sampling: SamplingSpec,
    pub window: WindowSpec,
    pub channels: Vec<ChannelKind>,
    pub balance: BalanceMode,
    pub smote_k: usize,
    pub model: ModelKind,
    pub n_trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: Option<usize>,
    pub k: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub holdout_fraction: f64,
    pub repeats: usize,
    pub ablation_groups: Vec<Vec<ChannelKind>>,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            features: None,
            out: PathBuf::from("."),
            category: Category::InsideActivity,
            classes: None,
            sampling: SamplingSpec::default(),
            window: WindowSpec::default(),
            channels: ChannelKind::ALL.to_vec(),
            balance: BalanceMode::None,
            smote_k: 5,
            model: ModelKind::Forest,
            n_trees: None,
            max_depth: None,
            min_samples_split: None,
            k: 10,
            seed: 0,
            jobs: None,
            holdout_fraction: 0.2,
            repeats: 10,
            ablation_groups: default_modality_groups(),
            synth: SynthSettings::default(),
        }
    }
}

fn parse_num<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_optional<V: FromStr>(key: &str, value: &str) -> Result<Option<V>> {
    match value.to_ascii_lowercase().as_str() {
        "" | "none" | "auto" => Ok(None),
        _ => parse_num(key, value).map(Some),
    }
}

fn parse_channels(value: &str) -> Result<Vec<ChannelKind>> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(ChannelKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let k: ChannelKind = part.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty channel list".into()));
    }
    Ok(out)
}

/// Groups separated by `;`, channels within a group by `,`.
fn parse_groups(value: &str) -> Result<Vec<Vec<ChannelKind>>> {
    if value.eq_ignore_ascii_case("default") {
        return Ok(default_modality_groups());
    }
    value
        .split(';')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(parse_channels)
        .collect()
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` set twice", i + 1)));
            }
            cfg.set(key, value.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                e => e,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "data_dir" => self.data_dir = Some(PathBuf::from(v)),
            "features" => self.features = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "category" => self.category = v.parse()?,
            "classes" => {
                self.classes = if v.is_empty() {
                    None
                } else {
                    Some(v.split(',').map(|c| c.trim().to_string()).collect())
                }
            }
            "target_rate" => self.sampling.target_rate = parse_num(key, v)?,
            "max_gap" => self.sampling.max_gap = parse_num(key, v)?,
            "window_length" => self.window.length = parse_num(key, v)?,
            "overlap" => self.window.overlap_fraction = parse_num(key, v)?,
            "channels" => self.channels = parse_channels(v)?,
            "balance" => self.balance = v.parse()?,
            "smote_k" => self.smote_k = parse_num(key, v)?,
            "model" => self.model = v.parse()?,
            "n_trees" => self.n_trees = parse_optional(key, v)?,
            "max_depth" => self.max_depth = parse_optional(key, v)?,
            "min_samples_split" => self.min_samples_split = parse_optional(key, v)?,
            "k" | "folds" => self.k = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "jobs" => self.jobs = parse_optional(key, v)?,
            "holdout_fraction" => self.holdout_fraction = parse_num(key, v)?,
            "repeats" => self.repeats = parse_num(key, v)?,
            "ablation_groups" => self.ablation_groups = parse_groups(v)?,
            "synth.separation" => self.synth.separation = parse_num(key, v)?,
            "synth.events_per_class" => self.synth.events_per_class = parse_num(key, v)?,
            "synth.trips" => self.synth.trips = parse_num(key, v)?,
            "synth.event_min" => self.synth.event_min = parse_num(key, v)?,
            "synth.event_max" => self.synth.event_max = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn taxonomy(&self) -> Result<Taxonomy> {
        match &self.classes {
            Some(c) => Taxonomy::custom(self.category, c.clone()),
            None => Ok(Taxonomy::standard(self.category)),
        }
    }

    pub fn feature_set(&self) -> Result<Arc<FeatureSet>> {
        Ok(Arc::new(FeatureSet::new(self.channels.clone())?))
    }

    pub fn balance_spec(&self) -> BalanceSpec {
        BalanceSpec {
            mode: self.balance,
            smote_k: self.smote_k,
            seed: self.seed,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        let mut p = self.model.params(self.seed);
        if let Some(n) = self.n_trees {
            p.n_trees = n;
        }
        if self.max_depth.is_some() {
            p.tree.max_depth = self.max_depth;
        }
        if let Some(m) = self.min_samples_split {
            p.tree.min_samples_split = m;
        }
        p
    }

    pub fn cv_spec(&self) -> CvSpec {
        CvSpec {
            k: self.k,
            seed: self.seed,
            balance: self.balance_spec(),
        }
    }

    /// Importance uses the configured balance mode.
    pub fn importance_spec(&self) -> ImportanceSpec {
        ImportanceSpec {
            holdout_fraction: self.holdout_fraction,
            repeats: self.repeats,
            seed: self.seed,
            balance: self.balance_spec(),
        }
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let mut spec = SynthSpec::standard(self.taxonomy()?, self.synth.separation, self.synth.events_per_class, self.seed);
        spec.n_trips = self.synth.trips;
        spec.event_duration_range = (self.synth.event_min, self.synth.event_max);
        spec.rate = self.sampling.target_rate;
        Ok(spec)
    }
}
