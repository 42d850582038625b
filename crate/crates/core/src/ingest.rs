//! Sensor log ingestion and resampling onto a shared uniform grid.
//!
//! Each sensor stream arrives as its own CSV file with a native, slightly
//! irregular rate. Tri-axial IMU files (`timestamp_ms,x,y,z`) yield three
//! channels; scalar files (`timestamp_ms,value`) yield one. All channels of a
//! trip are then interpolated onto one grid spanning the interval where every
//! channel has data.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interpolation {
    Linear,
    HoldPrevious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    AccelX,
    AccelY,
    AccelZ,
    GyroX,
    GyroY,
    GyroZ,
    AccelMag,
    GyroMag,
    Ppg,
    Hr,
    Light,
    Noise,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 12] = [
        ChannelKind::AccelX,
        ChannelKind::AccelY,
        ChannelKind::AccelZ,
        ChannelKind::GyroX,
        ChannelKind::GyroY,
        ChannelKind::GyroZ,
        ChannelKind::AccelMag,
        ChannelKind::GyroMag,
        ChannelKind::Ppg,
        ChannelKind::Hr,
        ChannelKind::Light,
        ChannelKind::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::AccelX => "accel_x",
            ChannelKind::AccelY => "accel_y",
            ChannelKind::AccelZ => "accel_z",
            ChannelKind::GyroX => "gyro_x",
            ChannelKind::GyroY => "gyro_y",
            ChannelKind::GyroZ => "gyro_z",
            ChannelKind::AccelMag => "accel_mag",
            ChannelKind::GyroMag => "gyro_mag",
            ChannelKind::Ppg => "ppg",
            ChannelKind::Hr => "hr",
            ChannelKind::Light => "light",
            ChannelKind::Noise => "noise",
        }
    }

    /// Nominal device sampling rate in Hz.
    pub fn native_rate(self) -> f64 {
        match self {
            ChannelKind::Hr => 1.0,
            ChannelKind::Light | ChannelKind::Noise => 1.0 / 60.0,
            _ => 10.0,
        }
    }

    pub fn interpolation(self) -> Interpolation {
        match self {
            ChannelKind::Light | ChannelKind::Noise => Interpolation::HoldPrevious,
            _ => Interpolation::Linear,
        }
    }

    /// Magnitude channels are computed from their three axes, never read from disk.
    pub fn is_derived(self) -> bool {
        matches!(self, ChannelKind::AccelMag | ChannelKind::GyroMag)
    }

    pub fn sensor(self) -> Sensor {
        match self {
            ChannelKind::AccelX | ChannelKind::AccelY | ChannelKind::AccelZ | ChannelKind::AccelMag => {
                Sensor::Accel
            }
            ChannelKind::GyroX | ChannelKind::GyroY | ChannelKind::GyroZ | ChannelKind::GyroMag => {
                Sensor::Gyro
            }
            ChannelKind::Ppg => Sensor::Ppg,
            ChannelKind::Hr => Sensor::Hr,
            ChannelKind::Light => Sensor::Light,
            ChannelKind::Noise => Sensor::Noise,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == key || format!("{k:?}").to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown channel `{s}`")))
    }
}

/// One physical sensor file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sensor {
    Accel,
    Gyro,
    Ppg,
    Hr,
    Light,
    Noise,
}

impl Sensor {
    pub const ALL: [Sensor; 6] = [
        Sensor::Accel,
        Sensor::Gyro,
        Sensor::Ppg,
        Sensor::Hr,
        Sensor::Light,
        Sensor::Noise,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Sensor::Accel => "accel",
            Sensor::Gyro => "gyro",
            Sensor::Ppg => "ppg",
            Sensor::Hr => "hr",
            Sensor::Light => "light",
            Sensor::Noise => "noise",
        }
    }

    /// Channels stored in the file, in column order.
    pub fn columns(self) -> &'static [ChannelKind] {
        match self {
            Sensor::Accel => &[ChannelKind::AccelX, ChannelKind::AccelY, ChannelKind::AccelZ],
            Sensor::Gyro => &[ChannelKind::GyroX, ChannelKind::GyroY, ChannelKind::GyroZ],
            Sensor::Ppg => &[ChannelKind::Ppg],
            Sensor::Hr => &[ChannelKind::Hr],
            Sensor::Light => &[ChannelKind::Light],
            Sensor::Noise => &[ChannelKind::Noise],
        }
    }

    pub fn magnitude(self) -> Option<ChannelKind> {
        match self {
            Sensor::Accel => Some(ChannelKind::AccelMag),
            Sensor::Gyro => Some(ChannelKind::GyroMag),
            _ => None,
        }
    }

    pub fn file_name(self, trip_id: &str) -> String {
        format!("{trip_id}_{}.csv", self.file_stem())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawChannel<T> {
    pub kind: ChannelKind,
    /// `(timestamp in ms since epoch, value)`, strictly increasing in time.
    pub samples: Vec<(i64, T)>,
}

impl<T: Scalar> RawChannel<T> {
    /// Validates ordering and finiteness.
    pub fn new(kind: ChannelKind, samples: Vec<(i64, T)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data(format!("channel {kind} has no samples")));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Data(format!(
                    "channel {kind}: timestamps not strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((t, _)) = samples.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("channel {kind}: non-finite value at t={t}")));
        }
        Ok(Self { kind, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_timestamp(&self) -> i64 {
        self.samples[0].0
    }

    pub fn last_timestamp(&self) -> i64 {
        self.samples[self.samples.len() - 1].0
    }
}

/// Splits CSV text into numbered records of trimmed fields.
///
/// Blank lines are skipped. The first non-blank line is treated as a header
/// when none of its fields parse as a number.
pub(crate) fn csv_records(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if first {
            first = false;
            if fields.iter().all(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        out.push((i + 1, fields));
    }
    out
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses the text of one sensor file into its channels (three for IMU files).
pub fn parse_sensor_str<T: Scalar>(text: &str, sensor: Sensor, origin: &str) -> Result<Vec<RawChannel<T>>> {
    let columns = sensor.columns();
    let width = columns.len() + 1;
    let mut rows: Vec<(i64, Vec<T>)> = Vec::new();
    for (line, fields) in csv_records(text) {
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        if fields.len() != width {
            return Err(perr(format!("expected {width} fields, found {}", fields.len())));
        }
        let ts: i64 = fields[0]
            .parse()
            .map_err(|_| perr(format!("invalid timestamp `{}`", fields[0])))?;
        let mut values = Vec::with_capacity(columns.len());
        for f in &fields[1..] {
            let v: T = f.parse().map_err(|_| perr(format!("invalid value `{f}`")))?;
            values.push(v);
        }
        // Log replay semantics: a repeated timestamp overrides the previous record.
        match rows.last_mut() {
            Some(last) if last.0 == ts => last.1 = values,
            _ => rows.push((ts, values)),
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{origin}: no samples")));
    }
    columns
        .iter()
        .enumerate()
        .map(|(c, &kind)| {
            let samples = rows.iter().map(|(t, v)| (*t, v[c])).collect();
            RawChannel::new(kind, samples).map_err(|e| Error::Data(format!("{origin}: {e}")))
        })
        .collect()
}

/// Reads a sensor file. Tri-axial files return three channels.
pub fn parse_sensor_log<T: Scalar>(path: &Path, sensor: Sensor) -> Result<Vec<RawChannel<T>>> {
    let text = read_text(path)?;
    parse_sensor_str(&text, sensor, &path.display().to_string())
}

/// Reads one channel from the file of the sensor that records it.
pub fn parse_channel_log<T: Scalar>(path: &Path, kind: ChannelKind) -> Result<RawChannel<T>> {
    if kind.is_derived() {
        return Err(Error::Data(format!("{kind} is derived and cannot be parsed from a file")));
    }
    parse_sensor_log(path, kind.sensor())?
        .into_iter()
        .find(|c| c.kind == kind)
        .ok_or_else(|| Error::Data(format!("{kind} not present in {}", path.display())))
}

/// Euclidean norm of three axis channels sharing one timestamp sequence.
pub fn derive_magnitude<T: Scalar>(x: &RawChannel<T>, y: &RawChannel<T>, z: &RawChannel<T>) -> Result<RawChannel<T>> {
    let kind = match (x.kind, y.kind, z.kind) {
        (ChannelKind::AccelX, ChannelKind::AccelY, ChannelKind::AccelZ) => ChannelKind::AccelMag,
        (ChannelKind::GyroX, ChannelKind::GyroY, ChannelKind::GyroZ) => ChannelKind::GyroMag,
        other => return Err(Error::Data(format!("cannot derive magnitude from {other:?}"))),
    };
    if x.len() != y.len() || x.len() != z.len() {
        return Err(Error::Data(format!(
            "axis lengths differ: {}, {}, {}",
            x.len(),
            y.len(),
            z.len()
        )));
    }
    let samples = x
        .samples
        .iter()
        .zip(&y.samples)
        .zip(&z.samples)
        .map(|((&(tx, vx), &(ty, vy)), &(tz, vz))| {
            if tx != ty || tx != tz {
                return Err(Error::Data(format!("axis timestamps differ ({tx}, {ty}, {tz})")));
            }
            Ok((tx, (vx * vx + vy * vy + vz * vz).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawChannel { kind, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Grid rate in Hz.
    pub target_rate: f64,
    /// Longest tolerated distance between bracketing source samples, in seconds.
    pub max_gap: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            target_rate: 10.0,
            max_gap: 5.0,
        }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate > 0.0 && self.target_rate.is_finite()) {
            return Err(Error::Config(format!("target_rate must be > 0, got {}", self.target_rate)));
        }
        if !(self.max_gap > 0.0) {
            return Err(Error::Config(format!("max_gap must be > 0, got {}", self.max_gap)));
        }
        Ok(())
    }

    /// Gap threshold for one channel in ms. Sparse channels sample slower than
    /// `max_gap`, so their threshold widens to two nominal sample periods.
    pub fn gap_threshold_ms(&self, kind: ChannelKind) -> f64 {
        1000.0 * self.max_gap.max(2.0 / kind.native_rate())
    }
}

/// All channels of one trip on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTrip<T> {
    pub trip_id: String,
    pub start_ms: i64,
    pub rate: f64,
    pub channels: BTreeMap<ChannelKind, Vec<T>>,
    /// True where some channel was interpolated across an over-long gap.
    pub gap_mask: Vec<bool>,
}

impl<T: Scalar> UniformTrip<T> {
    pub fn len(&self) -> usize {
        self.gap_mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gap_mask.is_empty()
    }

    /// Offset of grid sample `i` from `start_ms`, in ms.
    pub fn offset_ms(&self, i: usize) -> f64 {
        grid_offset_ms(i, self.rate)
    }

    pub fn time_ms(&self, i: usize) -> f64 {
        self.start_ms as f64 + self.offset_ms(i)
    }

    pub fn masked_count(&self) -> usize {
        self.gap_mask.iter().filter(|&&m| m).count()
    }
}

fn grid_offset_ms(i: usize, rate: f64) -> f64 {
    (i as f64 * 1000.0) / rate
}

/// Number of grid points for a span: floor(span_s * rate) + 1.
pub fn grid_len(span_ms: i64, rate: f64) -> usize {
    // The epsilon keeps exact multiples like 1000 ms at 10 Hz from flooring low.
    ((span_ms as f64 * rate / 1000.0) + 1e-9).floor() as usize + 1
}

/// Interpolates every channel onto a grid at `spec.target_rate` covering the
/// interval where all channels overlap.
pub fn align_and_resample<T: Scalar>(
    trip_id: &str,
    channels: &[RawChannel<T>],
    spec: &SamplingSpec,
) -> Result<UniformTrip<T>> {
    spec.validate()?;
    if channels.is_empty() {
        return Err(Error::Alignment("no channels to align".into()));
    }
    if let Some(c) = channels.iter().find(|c| c.is_empty()) {
        return Err(Error::Alignment(format!("channel {} is empty", c.kind)));
    }
    let start = channels.iter().map(RawChannel::first_timestamp).max().unwrap();
    let end = channels.iter().map(RawChannel::last_timestamp).min().unwrap();
    if end < start {
        return Err(Error::Alignment(format!(
            "channels do not overlap in time (latest start {start}, earliest end {end})"
        )));
    }
    let n = grid_len(end - start, spec.target_rate);
    let mut gap_mask = vec![false; n];
    let mut out = BTreeMap::new();
    for channel in channels {
        let threshold = spec.gap_threshold_ms(channel.kind);
        let values = resample_channel(channel, start, n, spec.target_rate, threshold, &mut gap_mask);
        out.insert(channel.kind, values);
    }
    Ok(UniformTrip {
        trip_id: trip_id.to_string(),
        start_ms: start,
        rate: spec.target_rate,
        channels: out,
        gap_mask,
    })
}

fn resample_channel<T: Scalar>(
    channel: &RawChannel<T>,
    start: i64,
    n: usize,
    rate: f64,
    gap_threshold_ms: f64,
    gap_mask: &mut [bool],
) -> Vec<T> {
    let s = &channel.samples;
    let mode = channel.kind.interpolation();
    let mut values = Vec::with_capacity(n);
    // Index of the last sample at or before the current grid time.
    let mut j = 0usize;
    for (i, masked) in gap_mask.iter_mut().enumerate() {
        let t = grid_offset_ms(i, rate);
        while j + 1 < s.len() && ((s[j + 1].0 - start) as f64) <= t {
            j += 1;
        }
        let (t0, v0) = s[j];
        let t0 = (t0 - start) as f64;
        if t0 == t || j + 1 == s.len() {
            values.push(v0);
            continue;
        }
        let (t1, v1) = s[j + 1];
        let t1 = (t1 - start) as f64;
        if t1 - t0 > gap_threshold_ms {
            *masked = true;
        }
        let v = match mode {
            Interpolation::HoldPrevious => v0,
            Interpolation::Linear => {
                let frac = T::from_f64_lossy((t - t0) / (t1 - t0));
                let v = v0 + (v1 - v0) * frac;
                // Keep rounding from stepping outside the bracketing values.
                let (lo, hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
                v.max(lo).min(hi)
            }
        };
        values.push(v);
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(kind: ChannelKind, s: &[(i64, f64)]) -> RawChannel<f64> {
        RawChannel::new(kind, s.to_vec()).unwrap()
    }

    #[test]
    fn parses_single_line() {
        let c: Vec<RawChannel<f64>> = parse_sensor_str("1614270000123,0.12\n", Sensor::Hr, "hr").unwrap();
        assert_eq!(c[0].samples, vec![(1614270000123, 0.12)]);
    }

    #[test]
    fn duplicate_timestamps_keep_last() {
        let c: Vec<RawChannel<f64>> = parse_sensor_str("5,1\n5,2\n7,3\n", Sensor::Hr, "hr").unwrap();
        assert_eq!(c[0].samples, vec![(5, 2.0), (7, 3.0)]);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = parse_sensor_str::<f64>("abc,0.1\n", Sensor::Hr, "hr.csv").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
        let err = parse_sensor_str::<f64>("timestamp,hr\n1,2\n3,x\n", Sensor::Hr, "hr.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn header_is_skipped() {
        let c: Vec<RawChannel<f64>> =
            parse_sensor_str("timestamp_ms,x,y,z\n0,1,2,3\n100,4,5,6\n", Sensor::Accel, "a").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[2].kind, ChannelKind::AccelZ);
        assert_eq!(c[2].samples, vec![(0, 3.0), (100, 6.0)]);
    }

    #[test]
    fn ingestion_data_errors() {
        assert!(matches!(parse_sensor_str::<f64>("", Sensor::Hr, "e"), Err(Error::Data(_))));
        assert!(matches!(parse_sensor_str::<f64>("ts,v\n", Sensor::Hr, "e"), Err(Error::Data(_))));
        assert!(matches!(parse_sensor_str::<f64>("5,1\n7,2\n5,3\n", Sensor::Hr, "e"), Err(Error::Data(_))));
        assert!(matches!(parse_sensor_str::<f64>("5,NaN\n", Sensor::Hr, "e"), Err(Error::Data(_))));
        assert!(matches!(parse_sensor_str::<f64>("5,1,2\n", Sensor::Hr, "e"), Err(Error::Parse { .. })));
    }

    #[test]
    fn magnitude_examples() {
        let x = ch(ChannelKind::AccelX, &[(0, 3.0), (100, 0.0)]);
        let y = ch(ChannelKind::AccelY, &[(0, 4.0), (100, 0.0)]);
        let z = ch(ChannelKind::AccelZ, &[(0, 0.0), (100, 0.0)]);
        let m = derive_magnitude(&x, &y, &z).unwrap();
        assert_eq!(m.kind, ChannelKind::AccelMag);
        assert_eq!(m.samples, vec![(0, 5.0), (100, 0.0)]);

        let long: Vec<(i64, f64)> = (0..10).map(|i| (i * 100, 1.0)).collect();
        let x = ch(ChannelKind::GyroX, &long);
        let y = ch(ChannelKind::GyroY, &long[..9]);
        let z = ch(ChannelKind::GyroZ, &long);
        assert!(matches!(derive_magnitude(&x, &y, &z), Err(Error::Data(_))));
    }

    #[test]
    fn linear_midpoint() {
        let hr = ch(ChannelKind::Hr, &[(0, 60.0), (1000, 62.0)]);
        let trip = align_and_resample("t", &[hr], &SamplingSpec::default()).unwrap();
        assert_eq!(trip.len(), 11);
        assert_eq!(trip.channels[&ChannelKind::Hr][5], 61.0);
    }

    #[test]
    fn hold_previous() {
        let light = ch(ChannelKind::Light, &[(0, 300.0), (60000, 310.0)]);
        let trip = align_and_resample("t", &[light], &SamplingSpec::default()).unwrap();
        assert_eq!(trip.channels[&ChannelKind::Light][300], 300.0);
        assert_eq!(trip.channels[&ChannelKind::Light][600], 310.0);
        // Two native periods apart is not a gap for a 1/60 Hz sensor.
        assert_eq!(trip.masked_count(), 0);
    }

    #[test]
    fn gap_mask_covers_interior_points() {
        let hr = ch(ChannelKind::Hr, &[(0, 60.0), (8000, 61.0), (9000, 61.0)]);
        let trip = align_and_resample("t", &[hr], &SamplingSpec::default()).unwrap();
        for i in 0..trip.len() {
            let t = trip.offset_ms(i);
            assert_eq!(trip.gap_mask[i], t > 0.0 && t < 8000.0, "i={i}");
        }
    }

    #[test]
    fn grid_anchors_on_latest_start() {
        let a = ch(ChannelKind::Hr, &[(0, 1.0), (2000, 1.0)]);
        let b = ch(ChannelKind::Ppg, &[(500, 1.0), (3000, 1.0)]);
        let trip = align_and_resample("t", &[a, b], &SamplingSpec::default()).unwrap();
        assert_eq!(trip.start_ms, 500);
        assert_eq!(trip.len(), 16);
    }

    #[test]
    fn disjoint_channels_fail() {
        let a = ch(ChannelKind::Hr, &[(0, 1.0), (1000, 1.0)]);
        let b = ch(ChannelKind::Ppg, &[(2000, 1.0), (3000, 1.0)]);
        assert!(matches!(
            align_and_resample("t", &[a, b], &SamplingSpec::default()),
            Err(Error::Alignment(_))
        ));
    }

    proptest! {
        #[test]
        fn on_grid_channels_are_unchanged(vals in prop::collection::vec(-1e3f64..1e3, 1..60), light in any::<bool>()) {
            let kind = if light { ChannelKind::Light } else { ChannelKind::Ppg };
            let s: Vec<(i64, f64)> = vals.iter().enumerate().map(|(i, &v)| (1_600_000_000_000 + 100 * i as i64, v)).collect();
            let trip = align_and_resample("t", &[RawChannel::new(kind, s).unwrap()], &SamplingSpec::default()).unwrap();
            let out = &trip.channels[&kind];
            prop_assert_eq!(out.len(), vals.len());
            for (a, b) in out.iter().zip(&vals) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn linear_output_is_bracketed(
            steps in prop::collection::vec((1i64..5000, -1e3f64..1e3), 2..30),
            rate in prop::sample::select(vec![1.0, 3.0, 10.0, 25.0]),
        ) {
            let mut t = 0i64;
            let s: Vec<(i64, f64)> = steps.iter().map(|&(dt, v)| { t += dt; (t, v) }).collect();
            let raw = RawChannel::new(ChannelKind::Hr, s.clone()).unwrap();
            let spec = SamplingSpec { target_rate: rate, max_gap: 5.0 };
            let trip = align_and_resample("t", &[raw], &spec).unwrap();
            prop_assert_eq!(trip.len(), grid_len(s[s.len() - 1].0 - s[0].0, rate));
            for (i, &v) in trip.channels[&ChannelKind::Hr].iter().enumerate() {
                let tm = trip.time_ms(i);
                let j = s.iter().rposition(|&(ts, _)| ts as f64 <= tm).unwrap();
                let k = (j + 1).min(s.len() - 1);
                let lo = s[j].1.min(s[k].1);
                let hi = s[j].1.max(s[k].1);
                prop_assert!(v >= lo && v <= hi);
            }
        }

        #[test]
        fn magnitude_ignores_axis_signs(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3, flips in 0u8..8) {
            let sign = |bit: u8| if flips & bit != 0 { -1.0 } else { 1.0 };
            let mk = |k, v: f64| RawChannel::new(k, vec![(0, v)]).unwrap();
            let a = derive_magnitude(&mk(ChannelKind::AccelX, x), &mk(ChannelKind::AccelY, y), &mk(ChannelKind::AccelZ, z)).unwrap();
            let b = derive_magnitude(
                &mk(ChannelKind::AccelX, sign(1) * x),
                &mk(ChannelKind::AccelY, sign(2) * y),
                &mk(ChannelKind::AccelZ, sign(4) * z),
            ).unwrap();
            prop_assert_eq!(a.samples[0].1.to_bits(), b.samples[0].1.to_bits());
        }
    }
}
