//! Synthetic multimodal trips with known class structure.
//!
//! Every annotated event draws each raw channel as
//! `baseline + amplitude * sin(2 pi f t + phase) + N(0, noise_sd)` using the
//! profile of the event's class; magnitude channels are derived from the
//! generated axes. `separation` scales how far each class profile sits from
//! the across-class mean profile, so zero makes the classes indistinguishable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ChannelKind, Sensor, UniformTrip};
use crate::labeling::{LabelInterval, LabelTrack, Taxonomy};
use crate::scalar::Scalar;

/// Channels that are generated directly (everything except magnitudes).
pub const RAW_CHANNELS: [ChannelKind; 10] = [
    ChannelKind::AccelX,
    ChannelKind::AccelY,
    ChannelKind::AccelZ,
    ChannelKind::GyroX,
    ChannelKind::GyroY,
    ChannelKind::GyroZ,
    ChannelKind::Ppg,
    ChannelKind::Hr,
    ChannelKind::Light,
    ChannelKind::Noise,
];

const TRIP_EPOCH_MS: i64 = 1_600_000_000_000;
const TRIP_SPACING_MS: i64 = 86_400_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub baseline: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub noise_sd: f64,
}

impl ChannelProfile {
    pub fn flat(baseline: f64, noise_sd: f64) -> Self {
        Self {
            baseline,
            amplitude: 0.0,
            frequency_hz: 0.0,
            noise_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub name: String,
    /// One entry per member of [`RAW_CHANNELS`].
    pub channels: BTreeMap<ChannelKind, ChannelProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub taxonomy: Taxonomy,
    /// Indexed like `taxonomy.classes`.
    pub classes: Vec<ClassProfile>,
    /// Seconds, inclusive range.
    pub event_duration_range: (f64, f64),
    pub separation: f64,
    pub n_events_per_class: usize,
    pub n_trips: usize,
    pub rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Class `c` sits `c` noise standard deviations above class 0 on every
    /// channel at separation 1, with class-specific oscillation frequencies.
    pub fn standard(taxonomy: Taxonomy, separation: f64, n_events_per_class: usize, seed: u64) -> Self {
        let bases: [(ChannelKind, f64, f64); 10] = [
            (ChannelKind::AccelX, 0.0, 0.5),
            (ChannelKind::AccelY, 0.0, 0.5),
            (ChannelKind::AccelZ, 9.8, 0.5),
            (ChannelKind::GyroX, 0.0, 0.2),
            (ChannelKind::GyroY, 0.0, 0.2),
            (ChannelKind::GyroZ, 0.0, 0.2),
            (ChannelKind::Ppg, 1000.0, 20.0),
            (ChannelKind::Hr, 70.0, 2.0),
            (ChannelKind::Light, 300.0, 10.0),
            (ChannelKind::Noise, 50.0, 3.0),
        ];
        let classes = taxonomy
            .classes
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let channels = bases
                    .iter()
                    .enumerate()
                    .map(|(k, &(kind, base, sd))| {
                        // Rotate class order per channel so no two channels rank classes alike.
                        let rank = ((c + k) % taxonomy.len()) as f64;
                        let profile = ChannelProfile {
                            baseline: base + rank * sd,
                            amplitude: sd * (0.5 + 0.25 * rank),
                            frequency_hz: 0.5 + 0.5 * rank,
                            noise_sd: sd,
                        };
                        (kind, profile)
                    })
                    .collect();
                ClassProfile {
                    name: name.clone(),
                    channels,
                }
            })
            .collect();
        Self {
            taxonomy,
            classes,
            event_duration_range: (4.0, 8.0),
            separation,
            n_events_per_class,
            n_trips: 2,
            rate: 10.0,
            seed,
        }
    }

    /// Every class shares `profile` on all channels.
    pub fn uniform(taxonomy: Taxonomy, profile: ChannelProfile, n_events_per_class: usize, seed: u64) -> Self {
        let classes = taxonomy
            .classes
            .iter()
            .map(|name| ClassProfile {
                name: name.clone(),
                channels: RAW_CHANNELS.iter().map(|&k| (k, profile)).collect(),
            })
            .collect();
        Self {
            taxonomy,
            classes,
            event_duration_range: (4.0, 8.0),
            separation: 1.0,
            n_events_per_class,
            n_trips: 1,
            rate: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.classes.len() != self.taxonomy.len() {
            return bad(format!("{} profiles for {} classes", self.classes.len(), self.taxonomy.len()));
        }
        for class in &self.classes {
            for k in RAW_CHANNELS {
                let Some(p) = class.channels.get(&k) else {
                    return bad(format!("class `{}` has no {k} profile", class.name));
                };
                let finite = [p.baseline, p.amplitude, p.frequency_hz, p.noise_sd].iter().all(|v| v.is_finite());
                if !finite || p.noise_sd < 0.0 || p.amplitude < 0.0 || p.frequency_hz < 0.0 {
                    return bad(format!("class `{}` has an invalid {k} profile", class.name));
                }
            }
        }
        let (lo, hi) = self.event_duration_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("invalid event duration range ({lo}, {hi})"));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad(format!("separation must be >= 0, got {}", self.separation));
        }
        if self.n_events_per_class == 0 || self.n_trips == 0 {
            return bad("need at least one event per class and one trip".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("invalid rate {}", self.rate));
        }
        Ok(())
    }

    /// Profiles after applying `separation` around the across-class mean.
    pub fn effective_profiles(&self) -> Vec<BTreeMap<ChannelKind, ChannelProfile>> {
        let n = self.classes.len() as f64;
        let s = self.separation;
        let mean_of = |k: ChannelKind, f: fn(&ChannelProfile) -> f64| {
            self.classes.iter().map(|c| f(&c.channels[&k])).sum::<f64>() / n
        };
        let blend = |m: f64, v: f64| m + s * (v - m);
        self.classes
            .iter()
            .map(|class| {
                RAW_CHANNELS
                    .iter()
                    .map(|&k| {
                        let p = &class.channels[&k];
                        let e = ChannelProfile {
                            baseline: blend(mean_of(k, |p| p.baseline), p.baseline),
                            amplitude: blend(mean_of(k, |p| p.amplitude), p.amplitude).max(0.0),
                            frequency_hz: blend(mean_of(k, |p| p.frequency_hz), p.frequency_hz).max(0.0),
                            noise_sd: blend(mean_of(k, |p| p.noise_sd), p.noise_sd).max(0.0),
                        };
                        (k, e)
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrip<T> {
    pub trip: UniformTrip<T>,
    pub labels: LabelTrack,
}

/// Generates `spec.n_trips` trips whose events cycle through a shuffled
/// sequence of `n_events_per_class` events of every class.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<Vec<SynthTrip<T>>> {
    spec.validate()?;
    let profiles = spec.effective_profiles();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events: Vec<usize> = (0..spec.classes.len())
        .flat_map(|c| std::iter::repeat_n(c, spec.n_events_per_class))
        .collect();
    events.shuffle(&mut rng);

    let step_ms = 1000.0 / spec.rate;
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let mut trips = Vec::with_capacity(spec.n_trips);
    for t in 0..spec.n_trips {
        let start_ms = TRIP_EPOCH_MS + t as i64 * TRIP_SPACING_MS;
        let mut channels: BTreeMap<ChannelKind, Vec<T>> = RAW_CHANNELS.iter().map(|&k| (k, Vec::new())).collect();
        let mut intervals = Vec::new();
        let mut n = 0usize;
        for &class in events.iter().skip(t).step_by(spec.n_trips) {
            let (lo, hi) = spec.event_duration_range;
            let secs = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let len = ((secs * spec.rate).round() as usize).max(1);
            for &k in &RAW_CHANNELS {
                let p = profiles[class][&k];
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let out = channels.get_mut(&k).unwrap();
                for i in 0..len {
                    let secs = i as f64 / spec.rate;
                    let v = p.baseline
                        + p.amplitude * (std::f64::consts::TAU * p.frequency_hz * secs + phase).sin()
                        + p.noise_sd * standard.sample(&mut rng);
                    out.push(T::from_f64_lossy(v));
                }
            }
            intervals.push(LabelInterval {
                start_ms: start_ms + (n as f64 * step_ms).round() as i64,
                end_ms: start_ms + ((n + len) as f64 * step_ms).round() as i64,
                class,
            });
            n += len;
        }
        if n == 0 {
            continue;
        }
        for (mag, axes) in [
            (ChannelKind::AccelMag, [ChannelKind::AccelX, ChannelKind::AccelY, ChannelKind::AccelZ]),
            (ChannelKind::GyroMag, [ChannelKind::GyroX, ChannelKind::GyroY, ChannelKind::GyroZ]),
        ] {
            let m = (0..n)
                .map(|i| {
                    let (x, y, z) = (channels[&axes[0]][i], channels[&axes[1]][i], channels[&axes[2]][i]);
                    (x * x + y * y + z * z).sqrt()
                })
                .collect();
            channels.insert(mag, m);
        }
        trips.push(SynthTrip {
            trip: UniformTrip {
                trip_id: format!("trip{t:03}"),
                start_ms,
                rate: spec.rate,
                channels,
                gap_mask: vec![false; n],
            },
            labels: LabelTrack::new(spec.taxonomy.clone(), intervals)?,
        });
    }
    Ok(trips)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes sensor logs and annotations in the on-disk ingestion formats.
pub fn write_dataset<T: Scalar>(dir: &Path, trips: &[SynthTrip<T>]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for st in trips {
        let trip = &st.trip;
        let timestamps: Vec<i64> = (0..trip.len())
            .map(|i| trip.start_ms + trip.offset_ms(i).round() as i64)
            .collect();
        for sensor in Sensor::ALL {
            let cols = sensor.columns();
            let mut text = String::from("timestamp_ms");
            for c in cols {
                text.push(',');
                text.push_str(c.name());
            }
            text.push('\n');
            for (i, ts) in timestamps.iter().enumerate() {
                text.push_str(&ts.to_string());
                for c in cols {
                    text.push(',');
                    text.push_str(&trip.channels[c][i].to_exact_string());
                }
                text.push('\n');
            }
            write_file(&dir.join(sensor.file_name(&trip.trip_id)), &text)?;
        }
        let category = st.labels.taxonomy.category;
        write_file(&dir.join(category.annotation_file_name(&trip.trip_id)), &st.labels.to_csv())?;
    }
    Ok(())
}
