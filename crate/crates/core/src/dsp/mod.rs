//! Spectral analysis: framed power spectrogram, spectral centroid
//! (instantaneous frequency), spectral entropy, Mel filterbank and MFCC.

mod frame;
mod mel;
mod mfcc;
mod spectral;
mod stft;

pub use frame::{FrameConfig, Window, MIN_DFT_LEN};
pub use mel::{
    critical_bandwidth, design_mel_filterbank, hz_to_mel, mel_to_hz, MelFilterbank,
    DEFAULT_F_MAX_HZ, DEFAULT_NUM_FILTERS,
};
pub use mfcc::{
    dct2_orthonormal, log_mel_energies, mfcc, mfcc_from_spectrogram, DEFAULT_N_COEFFS, LOG_FLOOR,
};
pub use spectral::{
    frame_centroid, frame_entropy, instantaneous_frequency, spectral_entropy,
    spectral_entropy_normalized,
};
pub use stft::{stft_power, Spectrogram};
