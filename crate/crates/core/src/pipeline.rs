//! End-to-end featurization: trip files on disk to a labeled feature matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::{extract_features, impute_and_assemble, FeatureSet};
use crate::ingest::{align_and_resample, derive_magnitude, parse_sensor_log, read_text, ChannelKind, RawChannel, SamplingSpec, Sensor, UniformTrip};
use crate::labeling::{label_windows, load_annotations, Category, LabelTrack, Taxonomy};
use crate::scalar::Scalar;
use crate::windowing::{expected_window_count, slice_windows, WindowSpec};

pub const AUDIT_SCHEMA_VERSION: u32 = 1;

/// Per-trip tallies from one featurization run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripAudit {
    pub trip_id: String,
    pub grid_samples: usize,
    pub masked_samples: usize,
    /// Windows a gap-free trip of this length would produce.
    pub candidate_windows: usize,
    pub gap_dropped_windows: usize,
    pub unlabeled_windows: usize,
    pub labeled_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestAudit {
    pub schema_version: u32,
    pub category: Category,
    pub sampling: SamplingSpec,
    pub window: WindowSpec,
    pub trips: Vec<TripAudit>,
    /// Trips that contributed no labeled windows.
    pub skipped_trips: Vec<String>,
    pub n_rows: usize,
    pub imputed_total: usize,
    /// Only columns with at least one imputed value.
    pub imputed_by_column: BTreeMap<String, usize>,
}

impl IngestAudit {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Trip ids that have an annotation file for `category`, sorted.
pub fn discover_trips(dir: &Path, category: Category) -> Result<Vec<String>> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(dir.to_path_buf()));
    }
    let suffix = format!("_{}.csv", category.file_stem());
    let mut trips = BTreeSet::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some(trip) = name.to_str().and_then(|n| n.strip_suffix(&suffix)) {
            if !trip.is_empty() {
                trips.insert(trip.to_string());
            }
        }
    }
    if trips.is_empty() {
        return Err(Error::MissingInput(dir.join(category.annotation_file_name("<trip>"))));
    }
    Ok(trips.into_iter().collect())
}

/// Sensors whose files are needed to produce `channels`.
pub fn required_sensors(channels: &[ChannelKind]) -> Vec<Sensor> {
    let set: BTreeSet<Sensor> = channels.iter().map(|c| c.sensor()).collect();
    set.into_iter().collect()
}

/// Reads the sensor files of one trip and resamples the requested channels.
pub fn load_trip<T: Scalar>(dir: &Path, trip_id: &str, channels: &[ChannelKind], sampling: &SamplingSpec) -> Result<UniformTrip<T>> {
    let mut raw: Vec<RawChannel<T>> = Vec::new();
    for sensor in required_sensors(channels) {
        let parsed = parse_sensor_log(&dir.join(sensor.file_name(trip_id)), sensor)?;
        if let Some(mag) = sensor.magnitude() {
            if channels.contains(&mag) {
                raw.push(derive_magnitude(&parsed[0], &parsed[1], &parsed[2])?);
            }
        }
        raw.extend(parsed.into_iter().filter(|c| channels.contains(&c.kind)));
    }
    align_and_resample(trip_id, &raw, sampling)
}

/// Windows, labels and featurizes already-resampled trips.
pub fn featurize_trips<T: Scalar>(
    trips: &[(UniformTrip<T>, LabelTrack)],
    window: &WindowSpec,
    feature_set: &Arc<FeatureSet>,
    sampling: &SamplingSpec,
) -> Result<(LabeledDataset<T>, IngestAudit)> {
    let taxonomy: Taxonomy = trips
        .first()
        .ok_or_else(|| Error::Data("no trips to featurize".into()))?
        .1
        .taxonomy
        .clone();
    let mut audits = Vec::with_capacity(trips.len());
    let mut skipped = Vec::new();
    let mut selected = Vec::new();
    let mut labels = Vec::new();
    for (trip, track) in trips {
        if track.taxonomy != taxonomy {
            return Err(Error::Taxonomy(format!("trip {} uses a different taxonomy", trip.trip_id)));
        }
        let len = window.samples(trip.rate)?;
        let windows = slice_windows(trip, window)?;
        let labeled = label_windows(&windows, track);
        let candidate = expected_window_count(trip.len(), len, window.stride(len));
        audits.push(TripAudit {
            trip_id: trip.trip_id.clone(),
            grid_samples: trip.len(),
            masked_samples: trip.masked_count(),
            candidate_windows: candidate,
            gap_dropped_windows: candidate - windows.len(),
            unlabeled_windows: windows.len() - labeled.len(),
            labeled_windows: labeled.len(),
        });
        if labeled.is_empty() {
            skipped.push(trip.trip_id.clone());
        }
        labels.extend_from_slice(&labeled.labels);
        let mut windows: Vec<Option<_>> = windows.into_iter().map(Some).collect();
        selected.extend(labeled.windows.iter().map(|&i| windows[i].take().unwrap()));
    }
    if selected.is_empty() {
        return Err(Error::Data("no labeled windows in any trip".into()));
    }
    let rows = selected
        .par_iter()
        .map(|w| extract_features(w, feature_set))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let matrix = impute_and_assemble(rows)?;
    let imputed_by_column = matrix
        .columns
        .iter()
        .zip(&matrix.imputed)
        .filter(|(_, &n)| n > 0)
        .map(|(c, &n)| (c.clone(), n))
        .collect();
    let audit = IngestAudit {
        schema_version: AUDIT_SCHEMA_VERSION,
        category: taxonomy.category,
        sampling: *sampling,
        window: *window,
        trips: audits,
        skipped_trips: skipped,
        n_rows: matrix.n_rows(),
        imputed_total: matrix.imputed_total(),
        imputed_by_column,
    };
    Ok((LabeledDataset::new(matrix, labels, taxonomy)?, audit))
}

/// Loads every trip annotated for `taxonomy.category` under `dir` and featurizes it.
pub fn featurize_dir<T: Scalar>(
    dir: &Path,
    taxonomy: &Taxonomy,
    sampling: &SamplingSpec,
    window: &WindowSpec,
    feature_set: &Arc<FeatureSet>,
) -> Result<(LabeledDataset<T>, IngestAudit)> {
    let ids = discover_trips(dir, taxonomy.category)?;
    let trips = ids
        .par_iter()
        .map(|id| {
            let track = load_annotations(&dir.join(taxonomy.category.annotation_file_name(id)), taxonomy)?;
            let trip = load_trip(dir, id, feature_set.channels(), sampling)?;
            Ok((trip, track))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    // Collected in order first so the reported error is the first failing trip.
    featurize_trips(&trips, window, feature_set, sampling)
}

/// Reads a labeled feature CSV written by [`LabeledDataset::to_csv`].
pub fn load_feature_csv<T: Scalar>(path: &Path, taxonomy: &Taxonomy) -> Result<LabeledDataset<T>> {
    let text = read_text(path)?;
    LabeledDataset::from_csv(&text, taxonomy.clone())
}
