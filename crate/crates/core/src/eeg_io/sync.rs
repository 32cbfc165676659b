//! Locating the synchronization clap: the first point where the signal
//! envelope reaches half of its global maximum.

use crate::error::{Error, Result};

/// Moving-RMS window length.
pub const ENVELOPE_WINDOW_S: f64 = 0.050;

const PEAK_FRACTION: f64 = 0.5;

/// Centered moving RMS with a rectangular window of `ENVELOPE_WINDOW_S`.
/// Samples outside the signal count as zero.
pub fn envelope(signal: &[f64], sample_rate_hz: f64) -> Vec<f64> {
    let w = ((ENVELOPE_WINDOW_S * sample_rate_hz).round() as usize).max(1);
    let half = w / 2;
    let n = signal.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in signal {
        acc += x * x;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (lo + w).min(n);
            ((prefix[hi] - prefix[lo]).max(0.0) / w as f64).sqrt()
        })
        .collect()
}

/// Time in seconds of the first sample whose envelope reaches half the global
/// envelope maximum.
pub fn find_sync_offset(signal: &[f64], sample_rate_hz: f64) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::Empty("sync signal".into()));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample rate {sample_rate_hz}"
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { line: 0 });
    }
    let env = envelope(signal, sample_rate_hz);
    let max = env.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::NoEnvelopePeak);
    }
    let threshold = PEAK_FRACTION * max;
    let idx = env
        .iter()
        .position(|&e| e >= threshold)
        .expect("the maximum itself reaches the threshold");
    Ok(idx as f64 / sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FS: f64 = 2500.0;

    /// Silence with 20 ms unit bursts (alternating sign) starting at each onset.
    fn bursts(duration_s: f64, onsets_s: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; (duration_s * FS) as usize];
        for &t0 in onsets_s {
            let start = (t0 * FS).round() as usize;
            for i in 0..(0.02 * FS) as usize {
                if let Some(v) = x.get_mut(start + i) {
                    *v = if i % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
        }
        x
    }

    #[test]
    fn burst_at_one_second() {
        let t = find_sync_offset(&bursts(3.0, &[1.0]), FS).unwrap();
        assert!((t - 1.0).abs() <= ENVELOPE_WINDOW_S, "{t}");
    }

    #[test]
    fn burst_at_start() {
        let t = find_sync_offset(&bursts(2.0, &[0.0]), FS).unwrap();
        assert!(t.abs() <= ENVELOPE_WINDOW_S, "{t}");
    }

    #[test]
    fn first_of_two_bursts_wins() {
        let t = find_sync_offset(&bursts(3.0, &[1.0, 2.0]), FS).unwrap();
        assert!((t - 1.0).abs() <= ENVELOPE_WINDOW_S, "{t}");
    }

    #[test]
    fn silence_has_no_peak() {
        assert!(matches!(
            find_sync_offset(&[0.0; 100], FS),
            Err(Error::NoEnvelopePeak)
        ));
        assert!(find_sync_offset(&[], FS).is_err());
    }

    proptest! {
        // Power-of-two gains are exact in floating point, so the offset must not move at all.
        #[test]
        fn invariant_to_gain(onset in 0.0f64..2.5, noise in proptest::collection::vec(-0.05f64..0.05, 7500), k in -20i32..20) {
            let mut x = bursts(3.0, &[onset]);
            for (v, n) in x.iter_mut().zip(&noise) {
                *v += n;
            }
            let gain = 2f64.powi(k);
            let scaled: Vec<f64> = x.iter().map(|v| v * gain).collect();
            prop_assert_eq!(find_sync_offset(&x, FS).unwrap(), find_sync_offset(&scaled, FS).unwrap());
        }
    }
}
