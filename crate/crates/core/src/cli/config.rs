use std::path::Path;

use crate::dsp::FrameConfig;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Mode};
use crate::featurize::FeatureConfig;
use crate::fsio::read_to_string;
use crate::kv::KvFile;
use crate::nn::TrainConfig;

/// Fully resolved settings for every command except `synth`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Position of annotation time zero in the recording, seconds.
    pub offset_s: f64,
    /// Offset for the second recording of `inter`/`compare`; defaults to `offset_s`.
    pub test_offset_s: f64,
    pub features: FeatureConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub const KEYS: [&'static str; 23] = [
        "seed",
        "offset_s",
        "test_offset_s",
        "frame_len_s",
        "overlap_s",
        "window",
        "n_dft",
        "num_filters",
        "f_max_hz",
        "reducer",
        "entropy_normalized",
        "epochs",
        "batch_size",
        "learning_rate",
        "beta1",
        "beta2",
        "eps",
        "repetitions",
        "train_fraction",
        "architecture",
        "hidden_dim",
        "normalize",
        "mode",
    ];

    /// Unknown keys are rejected, absent keys take defaults; `seed` is required.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&Self::KEYS)?;
        let seed: u64 = kv.require("seed")?;
        let offset_s: f64 = kv.get_or("offset_s", 0.0)?;
        let test_offset_s = kv.get_or("test_offset_s", offset_s)?;

        let fd = FeatureConfig::default();
        let n_dft = match kv.raw("n_dft") {
            None | Some("auto") => None,
            Some(_) => Some(kv.require::<usize>("n_dft")?),
        };
        let features = FeatureConfig {
            frame: FrameConfig {
                frame_len_s: kv.get_or("frame_len_s", fd.frame.frame_len_s)?,
                overlap_s: kv.get_or("overlap_s", fd.frame.overlap_s)?,
                window: kv.get_or("window", fd.frame.window)?,
                n_dft,
            },
            num_filters: kv.get_or("num_filters", fd.num_filters)?,
            f_max_hz: kv.get_or("f_max_hz", fd.f_max_hz)?,
            reducer: kv.get_or("reducer", fd.reducer)?,
            entropy_normalized: kv.get_or("entropy_normalized", fd.entropy_normalized)?,
        };

        let td = TrainConfig::default();
        let ed = ExperimentConfig::default();
        let experiment = ExperimentConfig {
            mode: kv.get_or("mode", Mode::Intra)?,
            repetitions: kv.get_or("repetitions", ed.repetitions)?,
            train_fraction: kv.get_or("train_fraction", ed.train_fraction)?,
            architecture: kv.get_or("architecture", ed.architecture)?,
            hidden_dim: kv.get_or("hidden_dim", ed.hidden_dim)?,
            normalize: kv.get_or("normalize", ed.normalize)?,
            seed,
            train: TrainConfig {
                epochs: kv.get_or("epochs", td.epochs)?,
                batch_size: kv.get_or("batch_size", td.batch_size)?,
                learning_rate: kv.get_or("learning_rate", td.learning_rate)?,
                beta1: kv.get_or("beta1", td.beta1)?,
                beta2: kv.get_or("beta2", td.beta2)?,
                eps: kv.get_or("eps", td.eps)?,
                seed,
            },
        };
        experiment.validate()?;
        if !offset_s.is_finite() || !test_offset_s.is_finite() {
            return Err(Error::Config("offsets must be finite".into()));
        }
        Ok(Self {
            seed,
            offset_s,
            test_offset_s,
            features,
            experiment,
        })
    }

    /// Every effective value, including defaults.
    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        let f = &self.features;
        let e = &self.experiment;
        kv.set("seed", self.seed);
        kv.set("offset_s", self.offset_s);
        kv.set("test_offset_s", self.test_offset_s);
        kv.set("frame_len_s", f.frame.frame_len_s);
        kv.set("overlap_s", f.frame.overlap_s);
        kv.set("window", f.frame.window);
        match f.frame.n_dft {
            Some(n) => kv.set("n_dft", n),
            None => kv.set("n_dft", "auto"),
        }
        kv.set("num_filters", f.num_filters);
        kv.set("f_max_hz", f.f_max_hz);
        kv.set("reducer", f.reducer);
        kv.set("entropy_normalized", f.entropy_normalized);
        kv.set("epochs", e.train.epochs);
        kv.set("batch_size", e.train.batch_size);
        kv.set("learning_rate", e.train.learning_rate);
        kv.set("beta1", e.train.beta1);
        kv.set("beta2", e.train.beta2);
        kv.set("eps", e.train.eps);
        kv.set("repetitions", e.repetitions);
        kv.set("train_fraction", e.train_fraction);
        kv.set("architecture", e.architecture);
        kv.set("hidden_dim", e.hidden_dim);
        kv.set("normalize", e.normalize);
        kv.set("mode", e.mode);
        kv
    }
}

/// Reads a `key=value` file; anything wrong with it is a configuration error.
pub fn load_kv(path: &Path) -> Result<KvFile> {
    let text = read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
    KvFile::parse(&text)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::from_kv(&load_kv(path)?)
}
