//! # freqdg
//!
//! Domain-generalization building blocks for sound event detection trained on
//! heterogeneous corpora, together with the post-processing and evaluation
//! pieces needed to score such a system.
//!
//! - [`stats`]: per-instance frequency-wise and channel-wise statistics
//! - [`mixstyle`]: Freq-MixStyle augmentation over a two-domain batch
//! - [`norm`]: FreqIN and adaptive residual normalization, with gradients
//! - [`frontend`]: WAV ingestion, resampling and log-mel features
//! - [`sebb`]: change-detection sound event bounding boxes
//! - [`metrics`]: intersection-based PSDS and segment-based mpAUC
//! - [`dataio`]: annotation, score, duration and class-map files
//!
//! All stochastic operations take an explicit [`RandomSource`]; the same seed
//! and the same call sequence always reproduce the same output bits.

pub mod dataio;
pub mod error;
pub mod frontend;
pub mod metrics;
pub mod mixstyle;
pub mod norm;
pub mod rng;
pub mod sebb;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::{beta_sample, RandomSource};
pub use tensor::{make_batch, Batch, DomainTag, FeatureMap};
