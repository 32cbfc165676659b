use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::stft::Spectrogram;

/// Power-weighted mean frequency of one frame; `None` when the frame carries no power.
pub fn frame_centroid<T: Scalar>(freqs_hz: &[T], power: &[T]) -> Option<T> {
    let total: T = power.iter().copied().sum();
    if !(total > T::zero()) {
        return None;
    }
    let moment: T = freqs_hz.iter().zip(power).map(|(&f, &p)| f * p).sum();
    let top = *freqs_hz.last()?;
    Some((moment / total).max(T::zero()).min(top))
}

/// Shannon entropy in bits of the frame's normalized power; `None` when the
/// frame carries no power. `0 log 0` counts as 0.
pub fn frame_entropy<T: Scalar>(power: &[T]) -> Option<T> {
    let total: T = power.iter().copied().sum();
    if !(total > T::zero()) {
        return None;
    }
    let h: T = power
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| {
            let q = p / total;
            -q * q.log2()
        })
        .sum();
    let h_max = T::of_usize(power.len()).log2();
    Some(h.max(T::zero()).min(h_max))
}

/// Per-frame spectral centroid in Hz.
pub fn instantaneous_frequency<T: Scalar>(spec: &Spectrogram<T>) -> Result<Vec<T>> {
    spec.power
        .iter()
        .enumerate()
        .map(|(t, row)| {
            frame_centroid(&spec.freqs_hz, row).ok_or(Error::ZeroPowerFrame { frame: t })
        })
        .collect()
}

/// Per-frame spectral entropy in bits, in `[0, log2 N_F]`.
pub fn spectral_entropy<T: Scalar>(spec: &Spectrogram<T>) -> Result<Vec<T>> {
    spec.power
        .iter()
        .enumerate()
        .map(|(t, row)| frame_entropy(row).ok_or(Error::ZeroPowerFrame { frame: t }))
        .collect()
}

/// Spectral entropy divided by `log2 N_F`, in `[0, 1]`.
pub fn spectral_entropy_normalized<T: Scalar>(spec: &Spectrogram<T>) -> Result<Vec<T>> {
    let h_max = T::of_usize(spec.n_bins()).log2();
    Ok(spectral_entropy(spec)?
        .into_iter()
        .map(|h| h / h_max)
        .collect())
}
