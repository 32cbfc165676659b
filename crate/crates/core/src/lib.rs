//! EEG error-trial detection.
//!
//! A recording is cut into labeled 1 s trials. Each channel of a trial is
//! summarized by 13 numbers: its mean spectral centroid, its mean spectral
//! entropy, and the time means of 11 MFCCs. A trial becomes a sequence of
//! per-channel 13-vectors, which a recurrent classifier (bidirectional LSTM
//! by default, or LSTM/GRU) labels as correct (OK) or erroneous (ERR).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix it to `f64`, which the pipeline and CLI use.

// Range checks are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dsp;
pub mod eeg_io;
pub mod error;
pub mod experiment;
pub mod featurize;
pub mod fsio;
pub mod kv;
pub mod nn;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Spectrogram = dsp::Spectrogram<f64>;
pub type MelFilterbank = dsp::MelFilterbank<f64>;
pub type TrialFeatures = featurize::TrialFeatures<f64>;
pub type Normalizer = featurize::Normalizer<f64>;
pub type SeqSample = nn::SeqSample<f64>;
pub type RecurrentParams = nn::RecurrentParams<f64>;
pub type Model = nn::Model<f64>;
pub type AdamState = nn::AdamState<f64>;

/// Version string embedded in every report and checkpoint.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
