//! Mel scale and triangular filterbank.
//!
//! Boundary frequencies are evenly spaced on the Mel scale, then snapped to
//! the nearest DFT bin. Filter `m` rises linearly from zero at boundary
//! `m-1` to one at boundary `m` and falls back to zero at boundary `m+1`, so
//! every filter starts where the previous one peaks.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_NUM_FILTERS: usize = 20;
pub const DEFAULT_F_MAX_HZ: f64 = 200.0;

fn check_non_negative<T: Scalar>(f: T) -> Result<()> {
    if f >= T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "frequency must be >= 0, got {f}"
        )))
    }
}

/// `2595 log10(1 + f / 700)`.
pub fn hz_to_mel<T: Scalar>(f: T) -> Result<T> {
    check_non_negative(f)?;
    Ok(T::of(2595.0) * (T::one() + f / T::of(700.0)).log10())
}

pub fn mel_to_hz<T: Scalar>(mel: T) -> Result<T> {
    check_non_negative(mel)?;
    Ok(T::of(700.0) * (T::of(10.0).powf(mel / T::of(2595.0)) - T::one()))
}

/// Critical bandwidth in Hz around centre frequency `f`:
/// `25 + 75 [1 + 1.4 (f/1000)^2]^0.69`.
pub fn critical_bandwidth<T: Scalar>(f: T) -> Result<T> {
    check_non_negative(f)?;
    let r = f / T::of(1000.0);
    Ok(T::of(25.0) + T::of(75.0) * (T::one() + T::of(1.4) * r * r).powf(T::of(0.69)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank<T> {
    pub num_filters: usize,
    /// `weights[filter][bin]` over the one-sided spectrum.
    pub weights: Vec<Vec<T>>,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// `num_filters + 2` strictly increasing DFT bin indices.
    pub boundary_bins: Vec<usize>,
    pub sample_rate_hz: f64,
    pub n_dft: usize,
}

impl<T: Scalar> MelFilterbank<T> {
    /// Peak bin of each filter.
    pub fn bin_centers(&self) -> &[usize] {
        &self.boundary_bins[1..=self.num_filters]
    }

    pub fn n_bins(&self) -> usize {
        self.n_dft / 2 + 1
    }

    /// `filter,bin,weight` rows for every non-zero weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("filter,bin,weight\n");
        for (m, row) in self.weights.iter().enumerate() {
            for (k, w) in row.iter().enumerate() {
                if *w != T::zero() {
                    let _ = writeln!(out, "{m},{k},{}", w.as_f64());
                }
            }
        }
        out
    }
}

pub fn design_mel_filterbank<T: Scalar>(
    num_filters: usize,
    fs: f64,
    n_dft: usize,
    f_max: f64,
) -> Result<MelFilterbank<T>> {
    if num_filters == 0 {
        return Err(Error::InvalidArgument("num_filters must be >= 1".into()));
    }
    if !(f_max > 0.0 && f_max <= fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "f_max {f_max} must lie in (0, fs/2 = {}]",
            fs / 2.0
        )));
    }
    let n_bins = n_dft / 2 + 1;
    let bin_hz = fs / n_dft as f64;
    let bins_in_band = (f_max / bin_hz).floor() as usize + 1;
    let n_points = num_filters + 2;
    if bins_in_band < n_points {
        return Err(Error::FilterbankCollapse(format!(
            "{bins_in_band} DFT bins in [0, {f_max}] Hz cannot hold {n_points} distinct filter edges; increase n_dft"
        )));
    }

    let mel_max = hz_to_mel(f_max)?;
    let mut boundary_bins = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let mel = mel_max * i as f64 / (n_points - 1) as f64;
        let hz = mel_to_hz(mel)?;
        boundary_bins.push(((hz / bin_hz).round() as usize).min(n_bins - 1));
    }
    if let Some(w) = boundary_bins.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::FilterbankCollapse(format!(
            "rounded filter edges coincide at bin {} (edges {:?}); increase n_dft",
            w[0], boundary_bins
        )));
    }

    let weights = (0..num_filters)
        .map(|m| {
            let (lo, mid, hi) = (boundary_bins[m], boundary_bins[m + 1], boundary_bins[m + 2]);
            (0..n_bins)
                .map(|k| {
                    if k <= lo || k >= hi {
                        T::zero()
                    } else if k <= mid {
                        T::of_usize(k - lo) / T::of_usize(mid - lo)
                    } else {
                        T::of_usize(hi - k) / T::of_usize(hi - mid)
                    }
                })
                .collect()
        })
        .collect();

    Ok(MelFilterbank {
        num_filters,
        weights,
        f_min_hz: 0.0,
        f_max_hz: f_max,
        boundary_bins,
        sample_rate_hz: fs,
        n_dft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mel_reference_points() {
        assert_eq!(hz_to_mel(0.0f64).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hz_to_mel(700.0f64).unwrap(),
            2595.0 * 2f64.log10(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(hz_to_mel(700.0f64).unwrap(), 781.17, epsilon = 0.01);
        assert_abs_diff_eq!(hz_to_mel(200.0f64).unwrap(), 283.2, epsilon = 0.05);
        assert!(hz_to_mel(-1.0f64).is_err());
        for f in [0.0, 13.0, 200.0, 4000.0] {
            assert_abs_diff_eq!(mel_to_hz(hz_to_mel(f).unwrap()).unwrap(), f, epsilon = 1e-9);
        }
    }

    #[test]
    fn critical_bandwidth_reference_points() {
        assert_abs_diff_eq!(critical_bandwidth(0.0f64).unwrap(), 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            critical_bandwidth(1000.0f64).unwrap(),
            25.0 + 75.0 * 2.4f64.powf(0.69),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            critical_bandwidth(1000.0f64).unwrap(),
            162.2,
            epsilon = 0.05
        );
        let mut prev = critical_bandwidth(0.0f64).unwrap();
        for i in 1..200 {
            let bw = critical_bandwidth(i as f64 * 50.0).unwrap();
            assert!(bw > prev);
            prev = bw;
        }
        assert!(critical_bandwidth(-0.5f64).is_err());
    }

    #[test]
    fn one_filter_peaks_at_mel_midpoint() {
        let fb: MelFilterbank<f64> = design_mel_filterbank(1, 2500.0, 512, 200.0).unwrap();
        let mid_hz = mel_to_hz::<f64>(hz_to_mel(200.0f64).unwrap() / 2.0).unwrap();
        let bin_hz: f64 = 2500.0 / 512.0;
        assert_eq!(
            fb.boundary_bins,
            vec![
                0,
                (mid_hz / bin_hz).round() as usize,
                (200.0 / bin_hz).round() as usize
            ]
        );
        assert_eq!(fb.bin_centers(), &[19]);
        assert_eq!(fb.weights[0][19], 1.0);
    }

    #[test]
    fn filters_are_triangles_chained_at_peaks() {
        let fb: MelFilterbank<f64> = design_mel_filterbank(20, 2500.0, 512, 200.0).unwrap();
        assert_eq!(fb.weights.len(), 20);
        for (m, row) in fb.weights.iter().enumerate() {
            let c = fb.bin_centers()[m];
            assert_eq!(row[c], 1.0);
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
            // unimodal: non-decreasing up to the peak, non-increasing after
            assert!(row[..=c].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[c..].windows(2).all(|w| w[0] >= w[1]));
            if m > 0 {
                let prev_peak = fb.bin_centers()[m - 1];
                assert!(row[..=prev_peak].iter().all(|&w| w == 0.0));
                assert!(row[prev_peak + 1] > 0.0);
            }
        }
    }

    #[test]
    fn too_few_bins_collapse() {
        let err = design_mel_filterbank::<f64>(20, 2500.0, 128, 200.0).unwrap_err();
        assert!(matches!(err, Error::FilterbankCollapse(_)), "{err}");
        assert!(design_mel_filterbank::<f64>(20, 2500.0, 256, 200.0).is_err());
        assert!(design_mel_filterbank::<f64>(0, 2500.0, 512, 200.0).is_err());
        assert!(design_mel_filterbank::<f64>(4, 300.0, 512, 200.0).is_err());
    }

    #[test]
    fn csv_dump_lists_nonzero_weights() {
        let fb: MelFilterbank<f64> = design_mel_filterbank(2, 2500.0, 512, 200.0).unwrap();
        let csv = fb.to_csv();
        let nonzero = fb.weights.iter().flatten().filter(|&&w| w != 0.0).count();
        assert_eq!(csv.lines().count(), nonzero + 1);
        assert!(csv.starts_with("filter,bin,weight\n"));
    }
}
