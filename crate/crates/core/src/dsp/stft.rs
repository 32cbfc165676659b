use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::frame::FrameConfig;

/// One-sided framed periodogram, `power[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub frame_times_s: Vec<T>,
    pub freqs_hz: Vec<T>,
    pub power: Vec<Vec<T>>,
    pub sample_rate_hz: f64,
    pub n_dft: usize,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn n_frames(&self) -> usize {
        self.power.len()
    }

    pub fn n_bins(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn frame_total(&self, frame: usize) -> T {
        self.power[frame].iter().copied().sum()
    }
}

/// Framed periodogram `|DFT(w * x)|^2 / N_frame` over bins `0..=n_dft/2`.
///
/// Frames start every `hop` samples; a trailing partial frame is dropped.
pub fn stft_power<T: Scalar>(x: &[T], fs: f64, cfg: &FrameConfig) -> Result<Spectrogram<T>> {
    cfg.validate(fs)?;
    let frame = cfg.frame_len(fs);
    let hop = cfg.hop(fs);
    let n_dft = cfg.n_dft(fs);
    if x.len() < frame {
        return Err(Error::SignalTooShort {
            len: x.len(),
            frame,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample in signal".into()));
    }

    let window: Vec<T> = cfg.window.coefficients(frame);
    let fft = FftPlanner::<T>::new().plan_fft_forward(n_dft);
    let n_bins = n_dft / 2 + 1;
    let norm = T::of_usize(frame);
    let n_frames = cfg.n_frames(x.len(), fs);

    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_dft];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let mut power = Vec::with_capacity(n_frames);
    let mut frame_times_s = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let start = f * hop;
        for (slot, (&v, &w)) in buf
            .iter_mut()
            .zip(x[start..start + frame].iter().zip(&window))
        {
            *slot = Complex::new(v * w, T::zero());
        }
        for slot in buf[frame..].iter_mut() {
            *slot = Complex::new(T::zero(), T::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        power.push(buf[..n_bins].iter().map(|c| c.norm_sqr() / norm).collect());
        frame_times_s.push(T::of((start as f64 + frame as f64 / 2.0) / fs));
    }

    let bin_hz = fs / n_dft as f64;
    let freqs_hz = (0..n_bins).map(|k| T::of(k as f64 * bin_hz)).collect();
    Ok(Spectrogram {
        frame_times_s,
        freqs_hz,
        power,
        sample_rate_hz: fs,
        n_dft,
    })
}
