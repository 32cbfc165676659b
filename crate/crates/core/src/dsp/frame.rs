use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest DFT length used when none is given. 20 Mel filters over 0-200 Hz
/// at 2500 Hz need at least ~300 bins before their rounded edges stop colliding.
pub const MIN_DFT_LEN: usize = 512;

// Guards floor() against 0.045 * 2500 landing a hair under an integer.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hamming,
    Rectangular,
}

impl Window {
    /// Symmetric window of length `n`.
    pub fn coefficients<T: Scalar>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); n],
            Window::Hamming if n == 1 => vec![T::one()],
            Window::Hamming => {
                let denom = T::of_usize(n - 1);
                (0..n)
                    .map(|i| T::of(0.54) - T::of(0.46) * (T::TAU() * T::of_usize(i) / denom).cos())
                    .collect()
            }
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Hamming => "hamming",
            Window::Rectangular => "rectangular",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(Window::Hamming),
            "rectangular" | "rect" => Ok(Window::Rectangular),
            _ => Err(Error::Config(format!("unknown window {s:?}"))),
        }
    }
}

/// Framing shared by all three per-channel features.
///
/// `overlap_s` is the overlap between consecutive frames, so the hop is
/// `frame_len_s - overlap_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_len_s: f64,
    pub overlap_s: f64,
    pub window: Window,
    /// DFT length; `None` means the next power of two at or above the frame
    /// length, but never below [`MIN_DFT_LEN`].
    pub n_dft: Option<usize>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.045,
            overlap_s: 0.010,
            window: Window::Hamming,
            n_dft: None,
        }
    }
}

impl FrameConfig {
    pub fn frame_len(&self, fs: f64) -> usize {
        (self.frame_len_s * fs + FLOOR_SLACK).floor() as usize
    }

    pub fn hop(&self, fs: f64) -> usize {
        ((self.frame_len_s - self.overlap_s) * fs + FLOOR_SLACK).floor() as usize
    }

    pub fn n_dft(&self, fs: f64) -> usize {
        self.n_dft
            .unwrap_or_else(|| self.frame_len(fs).next_power_of_two().max(MIN_DFT_LEN))
    }

    /// Number of full frames in a signal of `len` samples.
    pub fn n_frames(&self, len: usize, fs: f64) -> usize {
        let frame = self.frame_len(fs);
        if len < frame {
            0
        } else {
            (len - frame) / self.hop(fs) + 1
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.overlap_s > 0.0 && self.overlap_s < self.frame_len_s) {
            return Err(Error::Config(format!(
                "frame overlap {} must lie in (0, frame_len {})",
                self.overlap_s, self.frame_len_s
            )));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidArgument(format!("sample rate {fs}")));
        }
        if self.frame_len(fs) == 0 || self.hop(fs) == 0 {
            return Err(Error::Config(format!(
                "frame of {} s with hop {} s is empty at fs={fs}",
                self.frame_len_s,
                self.frame_len_s - self.overlap_s
            )));
        }
        if self.n_dft(fs) < self.frame_len(fs) {
            return Err(Error::Config(format!(
                "n_dft {} is shorter than the frame ({} samples)",
                self.n_dft(fs),
                self.frame_len(fs)
            )));
        }
        Ok(())
    }
}
