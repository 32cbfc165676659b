//! The `EEGC v1` text format.
//!
//! ```text
//! EEGC v1
//! fs=2500
//! subject=s01
//! Fp1,Fp2,...
//! <one CSV row per time sample, one column per channel, µV>
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsio;

const MAGIC: &str = "EEGC v1";

/// Multichannel recording, `samples[channel][time]` in µV.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub samples: Vec<Vec<f64>>,
    pub subject_id: String,
}

impl EegRecording {
    pub fn new(
        sample_rate_hz: f64,
        channel_names: Vec<String>,
        samples: Vec<Vec<f64>>,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        let rec = Self {
            sample_rate_hz,
            channel_names,
            samples,
            subject_id: subject_id.into(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::MalformedHeader(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.channel_names.is_empty() || self.channel_names.len() != self.samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel names for {} sample rows",
                self.channel_names.len(),
                self.samples.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &self.channel_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateChannel(name.clone()));
            }
        }
        let len = self.samples[0].len();
        if len == 0 {
            return Err(Error::Empty("recording has no samples".into()));
        }
        for (c, row) in self.samples.iter().enumerate() {
            if row.len() != len {
                return Err(Error::RaggedRows {
                    line: c,
                    found: row.len(),
                    expected: len,
                });
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { line: t });
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.samples[i].as_slice())
    }

    pub fn to_eegc(&self) -> String {
        let mut out = String::with_capacity(self.n_samples() * self.n_channels() * 12 + 64);
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(out, "fs={}", self.sample_rate_hz);
        let _ = writeln!(out, "subject={}", self.subject_id);
        out.push_str(&self.channel_names.join(","));
        out.push('\n');
        for t in 0..self.n_samples() {
            for (c, row) in self.samples.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", row[t]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_eegc(text: &str) -> Result<Self> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n').enumerate();
        let mut header = |what: &str| {
            lines
                .next()
                .map(|(_, l)| l)
                .ok_or_else(|| Error::MalformedHeader(format!("missing {what} line")))
        };
        let magic = header("magic")?;
        if magic != MAGIC {
            return Err(Error::MalformedHeader(format!(
                "expected {MAGIC:?}, got {magic:?}"
            )));
        }
        let fs_line = header("fs")?;
        let fs = fs_line
            .strip_prefix("fs=")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad sample-rate line {fs_line:?}")))?;
        let subject_line = header("subject")?;
        let subject = subject_line
            .strip_prefix("subject=")
            .ok_or_else(|| Error::MalformedHeader(format!("bad subject line {subject_line:?}")))?
            .to_string();
        let names_line = header("channel names")?;
        if names_line.is_empty() {
            return Err(Error::MalformedHeader("empty channel list".into()));
        }
        let channel_names: Vec<String> = names_line.split(',').map(str::to_string).collect();
        let n_ch = channel_names.len();

        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
        for (i, line) in lines {
            let line_no = i + 1;
            if line.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "empty data row".into(),
                });
            }
            let mut found = 0;
            for (c, field) in line.split(',').enumerate() {
                found += 1;
                if c >= n_ch {
                    continue;
                }
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("not a number: {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { line: line_no });
                }
                samples[c].push(v);
            }
            if found != n_ch {
                return Err(Error::RaggedRows {
                    line: line_no,
                    found,
                    expected: n_ch,
                });
            }
        }
        Self::new(fs, channel_names, samples, subject)
    }
}

pub fn load_recording(path: &Path) -> Result<EegRecording> {
    EegRecording::from_eegc(&fsio::read_to_string(path)?)
}

pub fn save_recording(rec: &EegRecording, path: &Path) -> Result<()> {
    rec.validate()?;
    if rec.channel_names.iter().any(|n| n.contains([',', '\n'])) || rec.subject_id.contains('\n') {
        return Err(Error::InvalidArgument(
            "channel names may not contain ',' or newlines".into(),
        ));
    }
    fsio::write_atomic(path, rec.to_eegc().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SMALL: &str = "EEGC v1\nfs=2500\nsubject=s01\nFz,Cz\n1.5,-2\n0,3.25\n4,5\n";

    #[test]
    fn parses_small_file() {
        let rec = EegRecording::from_eegc(SMALL).unwrap();
        assert_eq!(rec.n_channels(), 2);
        assert_eq!(rec.n_samples(), 3);
        assert_eq!(rec.samples[0], vec![1.5, 0.0, 4.0]);
        assert_eq!(rec.samples[1], vec![-2.0, 3.25, 5.0]);
        assert_eq!(rec.subject_id, "s01");
        assert_eq!(rec.sample_rate_hz, 2500.0);
        assert_eq!(rec.to_eegc(), SMALL);
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "EEGC v1\nfs=2500\nsubject=s\nA,B\n1,2\n3\n";
        let err = EegRecording::from_eegc(text).unwrap_err();
        assert!(err.to_string().contains("ragged rows"), "{err}");
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(matches!(
            EegRecording::from_eegc("EEGC v2\nfs=1\nsubject=s\nA\n1\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            EegRecording::from_eegc("EEGC v1\nfs=abc\nsubject=s\nA\n1\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            EegRecording::from_eegc("EEGC v1\nfs=1\nsubject=s\nA\nNaN\n"),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            EegRecording::from_eegc("EEGC v1\nfs=1\nsubject=s\nA,A\n1,2\n"),
            Err(Error::DuplicateChannel(_))
        ));
        assert!(matches!(
            EegRecording::from_eegc("EEGC v1\nfs=1\nsubject=s\nA\n"),
            Err(Error::Empty(_))
        ));
        assert!(EegRecording::from_eegc("EEGC v1\nfs=1\nsubject=s\nA\n1\n\n2\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.eegc");
        let rec = EegRecording::from_eegc(SMALL).unwrap();
        save_recording(&rec, &path).unwrap();
        assert_eq!(load_recording(&path).unwrap(), rec);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), SMALL);
    }

    fn arb_recording() -> impl Strategy<Value = EegRecording> {
        (1usize..5, 1usize..20, 1.0f64..5000.0).prop_flat_map(|(n_ch, n_t, fs)| {
            proptest::collection::vec(
                proptest::collection::vec(-1e6f64..1e6, n_t..=n_t),
                n_ch..=n_ch,
            )
            .prop_map(move |samples| {
                let names = (0..samples.len()).map(|c| format!("ch{c}")).collect();
                EegRecording::new(fs, names, samples, "prop").unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn eegc_round_trip_is_exact(rec in arb_recording()) {
            let text = rec.to_eegc();
            let back = EegRecording::from_eegc(&text).unwrap();
            prop_assert_eq!(&back, &rec);
            prop_assert_eq!(back.to_eegc(), text);
        }
    }
}
