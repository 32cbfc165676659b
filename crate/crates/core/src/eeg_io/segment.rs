use std::fmt;
use std::str::FromStr;

use crate::error::Error;

use super::annotations::AnnotationTrack;
use super::recording::EegRecording;

pub const TRIAL_DURATION_S: f64 = 1.0;

/// Binary trial class. `Err` is the positive class everywhere metrics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialLabel {
    Ok,
    Err,
}

impl TrialLabel {
    pub fn class_index(self) -> usize {
        match self {
            TrialLabel::Ok => 0,
            TrialLabel::Err => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(TrialLabel::Ok),
            1 => Some(TrialLabel::Err),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrialLabel::Ok => "OK",
            TrialLabel::Err => "ERR",
        }
    }
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "OK" => Ok(TrialLabel::Ok),
            "ERR" => Ok(TrialLabel::Err),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// One labeled 1 s segment across all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub subject_id: String,
    /// Index of the 1 s window on the grid anchored at the sync offset.
    pub trial_index: usize,
    /// Window start in recording time.
    pub start_s: f64,
    pub label: TrialLabel,
    pub sample_rate_hz: f64,
    pub samples: Vec<Vec<f64>>,
}

/// Cuts consecutive, non-overlapping 1 s windows starting at `offset_s`.
///
/// Annotation time zero corresponds to recording time `offset_s`. A window
/// becomes a trial only when it lies entirely inside one event; SIL events and
/// windows spanning boundaries or unlabeled gaps are dropped.
pub fn segment_trials(rec: &EegRecording, track: &AnnotationTrack, offset_s: f64) -> Vec<Trial> {
    let fs = rec.sample_rate_hz;
    let len = (TRIAL_DURATION_S * fs).round() as usize;
    let n = rec.n_samples();
    if offset_s < 0.0 || len == 0 {
        return Vec::new();
    }
    let mut trials = Vec::new();
    for k in 0.. {
        let start_s = offset_s + k as f64 * TRIAL_DURATION_S;
        let start = (start_s * fs).round() as usize;
        if start + len > n {
            break;
        }
        let ann_start = k as f64 * TRIAL_DURATION_S;
        let Some(event) = track.containing(ann_start, ann_start + TRIAL_DURATION_S) else {
            continue;
        };
        let Some(label) = event.label.trial_label() else {
            continue;
        };
        trials.push(Trial {
            subject_id: rec.subject_id.clone(),
            trial_index: k,
            start_s,
            label,
            sample_rate_hz: fs,
            samples: rec
                .samples
                .iter()
                .map(|ch| ch[start..start + len].to_vec())
                .collect(),
        });
    }
    trials
}
