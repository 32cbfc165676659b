//! Synthetic recordings with a controllable error-class signature.
//!
//! Background activity is low-passed Gaussian noise (40 Hz, 2nd order) with a
//! per-channel gain. Each channel belongs to one half of a binary channel
//! pattern selected by `signature`. During ERR events a narrowband tone is
//! added to the channels of the first half; during OK events the same tone is
//! added to the other half. Tone RMS equals `class_separation` times the noise
//! RMS, so `class_separation = 0` makes the two classes identically
//! distributed, and total narrowband power never identifies the class on its
//! own: only where it appears does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv::KvFile;

use super::annotations::{AnnotationEvent, AnnotationTrack, EventLabel};
use super::recording::EegRecording;

const NOISE_RMS_UV: f64 = 10.0;
const NOISE_CUTOFF_HZ: f64 = 40.0;
const OK_CHUNK_S: (f64, f64) = (2.0, 6.0);
const ERR_CHUNK_S: (f64, f64) = (1.5, 4.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_channels: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub error_fraction: f64,
    pub class_separation: f64,
    /// Index of the channel pattern carrying the class cue: pattern `k` splits
    /// the channels into alternating blocks of `ceil(n / 2^(k+1))`.
    pub signature: u32,
    pub tone_hz: f64,
    pub subject_id: String,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_channels: 61,
            duration_s: 60.0,
            sample_rate_hz: 2500.0,
            error_fraction: 0.3,
            class_separation: 1.0,
            signature: 0,
            tone_hz: 24.0,
            subject_id: "synth".into(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub const KEYS: [&'static str; 9] = [
        "n_channels",
        "duration_s",
        "sample_rate_hz",
        "error_fraction",
        "class_separation",
        "signature",
        "tone_hz",
        "subject",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_channels == 0 {
            return bad("n_channels must be >= 1".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            ));
        }
        if !(0.0..=1.0).contains(&self.error_fraction) {
            return bad(format!(
                "error_fraction must be in [0, 1], got {}",
                self.error_fraction
            ));
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            return bad(format!(
                "class_separation must be >= 0, got {}",
                self.class_separation
            ));
        }
        if !(self.tone_hz > 0.0 && self.tone_hz < self.sample_rate_hz / 2.0) {
            return bad(format!(
                "tone_hz must lie in (0, fs/2), got {}",
                self.tone_hz
            ));
        }
        if self.subject_id.contains(['\n', ',']) {
            return bad("subject may not contain ',' or newlines".into());
        }
        Ok(())
    }

    /// Reads a spec; `seed` is required, everything else defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&Self::KEYS)?;
        let d = Self::default();
        let spec = Self {
            n_channels: kv.get_or("n_channels", d.n_channels)?,
            duration_s: kv.get_or("duration_s", d.duration_s)?,
            sample_rate_hz: kv.get_or("sample_rate_hz", d.sample_rate_hz)?,
            error_fraction: kv.get_or("error_fraction", d.error_fraction)?,
            class_separation: kv.get_or("class_separation", d.class_separation)?,
            signature: kv.get_or("signature", d.signature)?,
            tone_hz: kv.get_or("tone_hz", d.tone_hz)?,
            subject_id: kv.get_or("subject", d.subject_id)?,
            seed: kv.require("seed")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        kv.set("n_channels", self.n_channels);
        kv.set("duration_s", self.duration_s);
        kv.set("sample_rate_hz", self.sample_rate_hz);
        kv.set("error_fraction", self.error_fraction);
        kv.set("class_separation", self.class_separation);
        kv.set("signature", self.signature);
        kv.set("tone_hz", self.tone_hz);
        kv.set("subject", &self.subject_id);
        kv.set("seed", self.seed);
        kv
    }

    /// Whether channel `c` carries the tone during ERR events (otherwise during OK events).
    pub fn is_err_channel(&self, c: usize) -> bool {
        let blocks = 2usize
            .saturating_pow(self.signature.saturating_add(1))
            .max(2);
        let block = self.n_channels.div_ceil(blocks).max(1);
        (c / block).is_multiple_of(2)
    }
}

/// Deterministic in `spec.seed`.
pub fn synth_dataset(spec: &SynthSpec) -> Result<(EegRecording, AnnotationTrack)> {
    spec.validate()?;
    let track = synth_track(spec)?;
    let fs = spec.sample_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::Config("duration shorter than one sample".into()));
    }

    let mut gain_rng = stream(spec.seed, 1);
    let gains: Vec<f64> = (0..spec.n_channels)
        .map(|_| gain_rng.random_range(0.6..1.4))
        .collect();

    let mut phase_rng = stream(spec.seed, 2);
    let tones: Vec<(f64, Vec<f64>)> = track
        .events()
        .iter()
        .map(|_| {
            let f = spec.tone_hz + phase_rng.random_range(-1.0..1.0);
            let phases = (0..spec.n_channels)
                .map(|_| phase_rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            (f, phases)
        })
        .collect();

    let filter = Biquad::lowpass(NOISE_CUTOFF_HZ, fs);
    let mut samples = Vec::with_capacity(spec.n_channels);
    for c in 0..spec.n_channels {
        let mut rng = stream(spec.seed, 16 + c as u64);
        let mut x: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        filter.apply(&mut x);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let noise_rms = NOISE_RMS_UV * gains[c];
        let scale = if rms > 0.0 { noise_rms / rms } else { 0.0 };
        x.iter_mut().for_each(|v| *v *= scale);

        let amp = spec.class_separation * noise_rms * std::f64::consts::SQRT_2;
        if amp > 0.0 {
            let err_channel = spec.is_err_channel(c);
            for (event, (f, phases)) in track.events().iter().zip(&tones) {
                let is_err = event.label != EventLabel::Ok;
                if is_err != err_channel {
                    continue;
                }
                let a = ((event.onset_s * fs).round() as usize).min(n);
                let b = ((event.offset_s * fs).round() as usize).min(n);
                let w = std::f64::consts::TAU * f / fs;
                for (i, v) in x[a..b].iter_mut().enumerate() {
                    *v += amp * (w * i as f64 + phases[c]).sin();
                }
            }
        }
        samples.push(x);
    }

    let names = (0..spec.n_channels)
        .map(|c| format!("ch{:02}", c + 1))
        .collect();
    let rec = EegRecording::new(fs, names, samples, spec.subject_id.clone())?;
    Ok((rec, track))
}

fn synth_track(spec: &SynthSpec) -> Result<AnnotationTrack> {
    let mut rng = stream(spec.seed, 0);
    let err_total = spec.error_fraction * spec.duration_s;
    let ok_total = spec.duration_s - err_total;
    let err_labels = [EventLabel::Nch, EventLabel::Oot, EventLabel::Mis];

    let mut chunks: Vec<(EventLabel, f64)> = Vec::new();
    for d in split_span(err_total, ERR_CHUNK_S, &mut rng) {
        chunks.push((err_labels[rng.random_range(0..err_labels.len())], d));
    }
    for d in split_span(ok_total, OK_CHUNK_S, &mut rng) {
        chunks.push((EventLabel::Ok, d));
    }
    // Fisher-Yates with our own stream so the layout does not depend on rand's shuffle internals.
    for i in (1..chunks.len()).rev() {
        let j = rng.random_range(0..=i);
        chunks.swap(i, j);
    }

    let mut t = 0.0;
    let mut events = Vec::with_capacity(chunks.len());
    let last = chunks.len().saturating_sub(1);
    for (i, (label, d)) in chunks.into_iter().enumerate() {
        let end = if i == last { spec.duration_s } else { t + d };
        events.push(AnnotationEvent::new(t, end, label));
        t = end;
    }
    AnnotationTrack::new(events)
}

/// Random chunk lengths in `[lo, hi)` summing to `total`; the last chunk absorbs the remainder.
fn split_span(total: f64, (lo, hi): (f64, f64), rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 1e-12 {
        let mut d = rng.random_range(lo..hi);
        if left - d < lo {
            d = left;
        }
        out.push(d);
        left -= d;
    }
    out
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// RBJ cookbook low-pass biquad, Q = 1/sqrt(2).
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, fs: f64) -> Self {
        let w0 = std::f64::consts::TAU * cutoff_hz / fs;
        let alpha = w0.sin() / std::f64::consts::SQRT_2;
        let cw = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b: [
                (1.0 - cw) / 2.0 / a0,
                (1.0 - cw) / a0,
                (1.0 - cw) / 2.0 / a0,
            ],
            a: [-2.0 * cw / a0, (1.0 - alpha) / a0],
        }
    }

    fn apply(&self, x: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 =
                self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthSpec {
        SynthSpec {
            n_channels: 4,
            duration_s: 20.0,
            sample_rate_hz: 250.0,
            seed,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = synth_dataset(&small(3)).unwrap();
        let b = synth_dataset(&small(3)).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(&small(4)).unwrap();
        assert_ne!(a.0.samples, c.0.samples);
    }

    #[test]
    fn error_span_matches_fraction() {
        let spec = SynthSpec {
            duration_s: 200.0,
            error_fraction: 0.5,
            ..small(11)
        };
        let (rec, track) = synth_dataset(&spec).unwrap();
        let err: f64 = [EventLabel::Nch, EventLabel::Oot, EventLabel::Mis]
            .iter()
            .map(|&l| track.total_duration(l))
            .sum();
        assert!((err - 100.0).abs() <= 1.0, "{err}");
        let total: f64 = track.events().iter().map(AnnotationEvent::duration_s).sum();
        assert!((total - 200.0).abs() < 1e-9);
        assert_eq!(rec.n_samples(), 50_000);
    }

    #[test]
    fn extremes_of_error_fraction() {
        for ef in [0.0, 1.0] {
            let (_, track) = synth_dataset(&SynthSpec {
                error_fraction: ef,
                ..small(5)
            })
            .unwrap();
            let ok = track.total_duration(EventLabel::Ok);
            assert!((ok - 20.0 * (1.0 - ef)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_separation_adds_nothing() {
        // Same noise stream; separation only adds tones.
        let quiet = synth_dataset(&SynthSpec {
            class_separation: 0.0,
            ..small(9)
        })
        .unwrap();
        let loud = synth_dataset(&SynthSpec {
            class_separation: 2.0,
            ..small(9)
        })
        .unwrap();
        assert_eq!(quiet.1, loud.1);
        assert_ne!(quiet.0.samples, loud.0.samples);
        let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        for (c, ch) in quiet.0.samples.iter().enumerate() {
            let r = rms(ch);
            assert!(r > 5.0 && r < 15.0, "channel {c} rms {r}");
        }
    }

    #[test]
    fn channel_patterns_split_in_half() {
        let spec = SynthSpec {
            n_channels: 61,
            ..SynthSpec::default()
        };
        let err: Vec<bool> = (0..61).map(|c| spec.is_err_channel(c)).collect();
        assert!(err[..31].iter().all(|&e| e));
        assert!(err[31..].iter().all(|&e| !e));
        let fine = SynthSpec {
            signature: 5,
            ..spec
        };
        let alt: Vec<bool> = (0..61).map(|c| fine.is_err_channel(c)).collect();
        assert!(alt.iter().step_by(2).all(|&e| e));
        assert!(alt.iter().skip(1).step_by(2).all(|&e| !e));
    }

    #[test]
    fn kv_round_trip_and_validation() {
        let spec = small(42);
        assert_eq!(SynthSpec::from_kv(&spec.to_kv()).unwrap(), spec);
        let mut kv = spec.to_kv();
        kv.set("error_fraction", 1.5);
        assert!(SynthSpec::from_kv(&kv).is_err());
        let kv = KvFile::parse("n_channels=3").unwrap();
        assert!(SynthSpec::from_kv(&kv)
            .unwrap_err()
            .to_string()
            .contains("seed"));
    }
}
