//! Driver-context classification from multimodal smartwatch logs.
//!
//! The pipeline runs: per-sensor CSV logs → [`ingest`] (validation and
//! resampling onto one grid) → [`windowing`] → [`features`] → [`labeling`]
//! against annotated intervals → [`balance`] → [`forest`] → [`evaluation`].
//! [`synth`] produces trips with known class structure for testing the whole
//! chain, and [`pipeline`] wires the stages together over a data directory.
//!
//! Numeric stages are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiation.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod balance;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod labeling;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod windowing;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RawChannelF64 = ingest::RawChannel<f64>;
pub type UniformTripF64 = ingest::UniformTrip<f64>;
pub type WindowF64 = windowing::Window<f64>;
pub type FeatureVectorF64 = features::FeatureVector<f64>;
pub type FeatureMatrixF64 = features::FeatureMatrix<f64>;
pub type ForestF64 = forest::Forest<f64>;
pub type LabeledDatasetF64 = dataset::LabeledDataset<f64>;

pub type FeatureMatrixF32 = features::FeatureMatrix<f32>;
pub type ForestF32 = forest::Forest<f32>;
pub type LabeledDatasetF32 = dataset::LabeledDataset<f32>;

/// Mixes a base seed with a salt (fold index, class, feature hash) into an
/// independent seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
