//! Fixed-length overlapping windows over a resampled trip.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ChannelKind, UniformTrip};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Seconds.
    pub length: f64,
    /// Fraction of a window shared with its successor, in [0, 1).
    pub overlap_fraction: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            length: 1.0,
            overlap_fraction: 0.5,
        }
    }
}

impl WindowSpec {
    /// Samples per window at `rate`. Fails unless `length * rate` is an integer >= 2.
    pub fn samples(&self, rate: f64) -> Result<usize> {
        if !(self.length > 0.0) {
            return Err(Error::Config(format!("window length must be > 0, got {}", self.length)));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap fraction must be in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        let exact = self.length * rate;
        let n = exact.round();
        if (exact - n).abs() > 1e-9 * exact.max(1.0) || n < 2.0 {
            return Err(Error::Config(format!(
                "window of {} s at {rate} Hz is not a whole number (>= 2) of samples",
                self.length
            )));
        }
        Ok(n as usize)
    }

    /// Hop between window starts: round-half-up of L * (1 - overlap), at least 1.
    pub fn stride(&self, samples: usize) -> usize {
        ((samples as f64 * (1.0 - self.overlap_fraction) + 0.5).floor() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    pub trip_id: String,
    /// Absolute time of the first sample, ms.
    pub start_ms: f64,
    /// Length in ms (samples / rate).
    pub duration_ms: f64,
    pub values: BTreeMap<ChannelKind, Vec<T>>,
}

impl<T> Window<T> {
    pub fn end_ms(&self) -> f64 {
        self.start_ms + self.duration_ms
    }

    pub fn midpoint_ms(&self) -> f64 {
        self.start_ms + self.duration_ms / 2.0
    }
}

/// Complete windows at offsets 0, S, 2S, ...; windows touching a gap-masked sample are skipped.
pub fn slice_windows<T: Scalar>(trip: &UniformTrip<T>, spec: &WindowSpec) -> Result<Vec<Window<T>>> {
    let len = spec.samples(trip.rate)?;
    let stride = spec.stride(len);
    let n = trip.len();
    let mut out = Vec::new();
    if n < len {
        return Ok(out);
    }
    // Prefix counts of masked samples make the gap test O(1) per window.
    let mut masked_before = Vec::with_capacity(n + 1);
    masked_before.push(0usize);
    for &m in &trip.gap_mask {
        masked_before.push(masked_before.last().unwrap() + usize::from(m));
    }
    let duration_ms = len as f64 * 1000.0 / trip.rate;
    let mut offset = 0;
    while offset + len <= n {
        if masked_before[offset + len] == masked_before[offset] {
            let values = trip
                .channels
                .iter()
                .map(|(&k, v)| (k, v[offset..offset + len].to_vec()))
                .collect();
            out.push(Window {
                trip_id: trip.trip_id.clone(),
                start_ms: trip.time_ms(offset),
                duration_ms,
                values,
            });
        }
        offset += stride;
    }
    Ok(out)
}

/// Number of windows `slice_windows` would emit for a gap-free trip of `n` samples.
pub fn expected_window_count(n: usize, len: usize, stride: usize) -> usize {
    if n < len {
        0
    } else {
        (n - len) / stride + 1
    }
}
