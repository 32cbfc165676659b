//! Per-trial `N x 13` feature matrices and train-fitted z-score normalization.
//!
//! Column order is fixed: spectral centroid (Hz), spectral entropy (bits),
//! then MFCC `c_1..c_11`, each reduced over the frames of the 1 s trial.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dsp::{
    design_mel_filterbank, frame_centroid, frame_entropy, mfcc_from_spectrogram, stft_power,
    FrameConfig, MelFilterbank, DEFAULT_F_MAX_HZ, DEFAULT_NUM_FILTERS,
};
use crate::eeg_io::{Trial, TrialLabel};
use crate::error::{Error, Result};
use crate::nn::SeqSample;
use crate::scalar::Scalar;

pub const FEATURES_PER_CHANNEL: usize = 13;
const N_MFCC: usize = FEATURES_PER_CHANNEL - 2;
pub const STD_FLOOR: f64 = 1e-8;

pub type FeatureRow<T> = [T; FEATURES_PER_CHANNEL];

/// How a per-frame feature series collapses to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reducer {
    #[default]
    Mean,
    Median,
}

impl Reducer {
    fn reduce<T: Scalar>(self, mut v: Vec<T>) -> T {
        debug_assert!(!v.is_empty());
        match self {
            Reducer::Mean => v.iter().copied().sum::<T>() / T::of_usize(v.len()),
            Reducer::Median => {
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
                }
            }
        }
    }
}

impl FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reducer::Mean),
            "median" => Ok(Reducer::Median),
            _ => Err(Error::Config(format!("unknown reducer {s:?}"))),
        }
    }
}

impl std::fmt::Display for Reducer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Reducer::Mean => "mean",
            Reducer::Median => "median",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub frame: FrameConfig,
    pub num_filters: usize,
    pub f_max_hz: f64,
    pub reducer: Reducer,
    /// Divide entropy by `log2 N_F` so it lies in `[0, 1]`.
    pub entropy_normalized: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            num_filters: DEFAULT_NUM_FILTERS,
            f_max_hz: DEFAULT_F_MAX_HZ,
            reducer: Reducer::Mean,
            entropy_normalized: false,
        }
    }
}

impl FeatureConfig {
    pub fn filterbank<T: Scalar>(&self, fs: f64) -> Result<MelFilterbank<T>> {
        self.frame.validate(fs)?;
        design_mel_filterbank(self.num_filters, fs, self.frame.n_dft(fs), self.f_max_hz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFeatures<T> {
    pub subject_id: String,
    pub trial_index: usize,
    pub label: TrialLabel,
    /// One row per channel, in recording order.
    pub matrix: Vec<FeatureRow<T>>,
}

impl<T: Scalar> TrialFeatures<T> {
    pub fn n_channels(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_sample(&self) -> SeqSample<T> {
        SeqSample {
            sequence: self.matrix.iter().map(|r| r.to_vec()).collect(),
            label: self.label.class_index(),
        }
    }
}

/// Feature extraction with a filterbank designed once for a sample rate.
#[derive(Debug, Clone)]
pub struct Featurizer<T> {
    pub config: FeatureConfig,
    pub filterbank: MelFilterbank<T>,
}

impl<T: Scalar> Featurizer<T> {
    pub fn new(config: FeatureConfig, fs: f64) -> Result<Self> {
        let filterbank = config.filterbank(fs)?;
        Ok(Self { config, filterbank })
    }

    pub fn featurize(&self, trial: &Trial) -> Result<TrialFeatures<T>> {
        if trial.sample_rate_hz != self.filterbank.sample_rate_hz {
            return Err(Error::DimensionMismatch(format!(
                "trial sampled at {} Hz, filterbank designed for {} Hz",
                trial.sample_rate_hz, self.filterbank.sample_rate_hz
            )));
        }
        let matrix = trial
            .samples
            .iter()
            .enumerate()
            .map(|(c, ch)| self.channel_row(c, ch, trial.sample_rate_hz))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialFeatures {
            subject_id: trial.subject_id.clone(),
            trial_index: trial.trial_index,
            label: trial.label,
            matrix,
        })
    }

    fn channel_row(&self, channel: usize, samples: &[f64], fs: f64) -> Result<FeatureRow<T>> {
        let x: Vec<T> = samples.iter().map(|&v| T::of(v)).collect();
        let mut spec = stft_power(&x, fs, &self.config.frame)?;
        // Frames without power have no centroid or entropy; drop them from every column.
        spec.power
            .retain(|row| row.iter().copied().sum::<T>() > T::zero());
        if spec.power.is_empty() {
            return Err(Error::SilentChannel { channel });
        }
        let h_scale = if self.config.entropy_normalized {
            T::one() / T::of_usize(spec.n_bins()).log2()
        } else {
            T::one()
        };
        let centroid: Vec<T> = spec
            .power
            .iter()
            .map(|row| frame_centroid(&spec.freqs_hz, row).expect("non-zero frame"))
            .collect();
        let entropy: Vec<T> = spec
            .power
            .iter()
            .map(|row| frame_entropy(row).expect("non-zero frame") * h_scale)
            .collect();
        let cepstra = mfcc_from_spectrogram(&spec, &self.filterbank, N_MFCC)?;

        let reducer = self.config.reducer;
        let mut row = [T::zero(); FEATURES_PER_CHANNEL];
        row[0] = reducer.reduce(centroid);
        row[1] = reducer.reduce(entropy);
        for j in 0..N_MFCC {
            row[2 + j] = reducer.reduce(cepstra.iter().map(|c| c[j]).collect());
        }
        Ok(row)
    }
}

/// Featurizes every trial of a recording with one filterbank.
pub fn featurize_trials<T: Scalar>(
    trials: &[Trial],
    config: &FeatureConfig,
) -> Result<Vec<TrialFeatures<T>>> {
    let Some(first) = trials.first() else {
        return Ok(Vec::new());
    };
    let fz = Featurizer::new(config.clone(), first.sample_rate_hz)?;
    trials.iter().map(|t| fz.featurize(t)).collect()
}

/// Features with mean reduction and raw (bit) entropy.
pub fn featurize_trial<T: Scalar>(
    trial: &Trial,
    cfg: &FrameConfig,
    fb: &MelFilterbank<T>,
) -> Result<TrialFeatures<T>> {
    let featurizer = Featurizer {
        config: FeatureConfig {
            frame: *cfg,
            num_filters: fb.num_filters,
            f_max_hz: fb.f_max_hz,
            ..FeatureConfig::default()
        },
        filterbank: fb.clone(),
    };
    if cfg.n_dft(trial.sample_rate_hz) != fb.n_dft {
        return Err(Error::DimensionMismatch(format!(
            "frame config uses n_dft={} but filterbank was designed for {}",
            cfg.n_dft(trial.sample_rate_hz),
            fb.n_dft
        )));
    }
    featurizer.featurize(trial)
}

/// Per-column z-score statistics pooled over every channel row of the training trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer<T> {
    pub means: FeatureRow<T>,
    pub stds: FeatureRow<T>,
}

impl<T: Scalar> Normalizer<T> {
    pub fn identity() -> Self {
        Self {
            means: [T::zero(); FEATURES_PER_CHANNEL],
            stds: [T::one(); FEATURES_PER_CHANNEL],
        }
    }

    pub fn apply(&self, feats: &TrialFeatures<T>) -> TrialFeatures<T> {
        let matrix = feats
            .matrix
            .iter()
            .map(|row| std::array::from_fn(|j| (row[j] - self.means[j]) / self.stds[j]))
            .collect();
        TrialFeatures {
            matrix,
            ..feats.clone()
        }
    }
}

/// Population mean and standard deviation per column; the standard deviation is
/// floored at [`STD_FLOOR`]. Rows are reduced in `(subject, trial)` order.
pub fn fit_normalizer<T: Scalar>(train: &[TrialFeatures<T>]) -> Result<Normalizer<T>> {
    let mut ordered: Vec<&TrialFeatures<T>> = train.iter().collect();
    ordered.sort_by(|a, b| (&a.subject_id, a.trial_index).cmp(&(&b.subject_id, b.trial_index)));
    let rows: Vec<&FeatureRow<T>> = ordered.iter().flat_map(|t| t.matrix.iter()).collect();
    if rows.is_empty() {
        return Err(Error::Empty(
            "normalizer needs at least one training row".into(),
        ));
    }
    let n = T::of_usize(rows.len());
    let mut means = [T::zero(); FEATURES_PER_CHANNEL];
    for row in &rows {
        for j in 0..FEATURES_PER_CHANNEL {
            means[j] += row[j];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = [T::zero(); FEATURES_PER_CHANNEL];
    for row in &rows {
        for j in 0..FEATURES_PER_CHANNEL {
            let d = row[j] - means[j];
            vars[j] += d * d;
        }
    }
    let floor = T::of(STD_FLOOR);
    let stds = vars.map(|v| (v / n).sqrt().max(floor));
    Ok(Normalizer { means, stds })
}

pub fn apply_normalizer<T: Scalar>(
    norm: &Normalizer<T>,
    feats: &TrialFeatures<T>,
) -> TrialFeatures<T> {
    norm.apply(feats)
}

const CSV_HEADER: &str = "subject,trial,label,channel,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13";

/// One row per `(trial, channel)`; values printed with round-trip precision.
pub fn features_to_csv<T: Scalar>(feats: &[TrialFeatures<T>]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for t in feats {
        for (c, row) in t.matrix.iter().enumerate() {
            let _ = write!(out, "{},{},{},{}", t.subject_id, t.trial_index, t.label, c);
            for v in row {
                let _ = write!(out, ",{}", v);
            }
            out.push('\n');
        }
    }
    out
}

pub fn features_from_csv<T: Scalar + FromStr>(text: &str) -> Result<Vec<TrialFeatures<T>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::MalformedHeader(format!(
                "expected feature header, got {:?}",
                other.map(|(_, l)| l).unwrap_or("")
            )))
        }
    }
    let mut out: Vec<TrialFeatures<T>> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + FEATURES_PER_CHANNEL {
            return Err(Error::RaggedRows {
                line: line_no,
                found: fields.len(),
                expected: 4 + FEATURES_PER_CHANNEL,
            });
        }
        let parse_err = |what: &str| Error::Parse {
            line: line_no,
            msg: format!("bad {what}"),
        };
        let trial: usize = fields[1].parse().map_err(|_| parse_err("trial index"))?;
        let label: TrialLabel = fields[2].parse()?;
        let channel: usize = fields[3].parse().map_err(|_| parse_err("channel"))?;
        let mut row = [T::zero(); FEATURES_PER_CHANNEL];
        for (j, f) in fields[4..].iter().enumerate() {
            row[j] = f.parse().map_err(|_| parse_err("feature value"))?;
            if !row[j].is_finite() {
                return Err(Error::NonFinite { line: line_no });
            }
        }
        let same_trial = out
            .last()
            .is_some_and(|t| t.subject_id == fields[0] && t.trial_index == trial);
        if same_trial {
            let t = out.last_mut().expect("checked");
            if t.label != label || channel != t.matrix.len() {
                return Err(parse_err("channel sequence"));
            }
            t.matrix.push(row);
        } else {
            if channel != 0 {
                return Err(parse_err("channel sequence"));
            }
            out.push(TrialFeatures {
                subject_id: fields[0].to_string(),
                trial_index: trial,
                label,
                matrix: vec![row],
            });
        }
    }
    Ok(out)
}
