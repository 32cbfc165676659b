use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::frame::FrameConfig;
use super::mel::MelFilterbank;
use super::stft::{stft_power, Spectrogram};

pub const DEFAULT_N_COEFFS: usize = 11;

/// Added to filterbank energies before the natural log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Orthonormal DCT-II.
pub fn dct2_orthonormal<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let nf = T::of_usize(n);
    let s0 = (T::one() / nf).sqrt();
    let sk = (T::of(2.0) / nf).sqrt();
    (0..n)
        .map(|k| {
            let sum: T = x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * (T::PI() * T::of_usize(k) * T::of_usize(2 * i + 1) / (T::of(2.0) * nf))
                        .cos()
                })
                .sum();
            if k == 0 {
                s0 * sum
            } else {
                sk * sum
            }
        })
        .collect()
}

/// `ln(sum_k h_m(k) P(k) + LOG_FLOOR)` for each filter.
pub fn log_mel_energies<T: Scalar>(power: &[T], fb: &MelFilterbank<T>) -> Vec<T> {
    let floor = T::of(LOG_FLOOR);
    fb.weights
        .iter()
        .map(|h| {
            let e: T = h.iter().zip(power).map(|(&w, &p)| w * p).sum();
            (e + floor).ln()
        })
        .collect()
}

/// Cepstral coefficients `c_1..=c_n` per frame of an existing spectrogram
/// (`c_0` is dropped).
pub fn mfcc_from_spectrogram<T: Scalar>(
    spec: &Spectrogram<T>,
    fb: &MelFilterbank<T>,
    n_coeffs: usize,
) -> Result<Vec<Vec<T>>> {
    if fb.n_dft != spec.n_dft || fb.sample_rate_hz != spec.sample_rate_hz {
        return Err(Error::DimensionMismatch(format!(
            "filterbank designed for n_dft={} fs={} but spectrogram has n_dft={} fs={}",
            fb.n_dft, fb.sample_rate_hz, spec.n_dft, spec.sample_rate_hz
        )));
    }
    if n_coeffs == 0 || n_coeffs >= fb.num_filters {
        return Err(Error::InvalidArgument(format!(
            "n_coeffs must lie in 1..{} for {} filters",
            fb.num_filters, fb.num_filters
        )));
    }
    Ok(spec
        .power
        .iter()
        .map(|row| {
            let c = dct2_orthonormal(&log_mel_energies(row, fb));
            c[1..=n_coeffs].to_vec()
        })
        .collect())
}

/// `frames x n_coeffs` MFCC matrix of `x`.
pub fn mfcc<T: Scalar>(
    x: &[T],
    fs: f64,
    cfg: &FrameConfig,
    fb: &MelFilterbank<T>,
    n_coeffs: usize,
) -> Result<Vec<Vec<T>>> {
    mfcc_from_spectrogram(&stft_power(x, fs, cfg)?, fb, n_coeffs)
}
