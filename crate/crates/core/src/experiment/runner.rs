//! Repeated undersample → split → normalize → train → evaluate runs.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::{fit_normalizer, Normalizer, TrialFeatures};
use crate::nn::{
    init_architecture, train, Architecture, SeqSample, TrainConfig, DEFAULT_HIDDEN_DIM,
};
use crate::scalar::Scalar;
use crate::TOOL_VERSION;

use super::metrics::{evaluate, metrics, ConfusionMatrix, MetricsReport};
use super::protocol::{random_split, undersample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Intra,
    Inter,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Intra => "intra",
            Mode::Inter => "inter",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intra" => Ok(Mode::Intra),
            "inter" => Ok(Mode::Inter),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub architecture: Architecture,
    pub hidden_dim: usize,
    /// z-score features with statistics from the training part of each repetition.
    pub normalize: bool,
    pub seed: u64,
    /// `train.seed` is ignored; each repetition derives its own.
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Intra,
            repetitions: 10,
            train_fraction: 0.75,
            architecture: Architecture::Bilstm,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            normalize: true,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be >= 1".into()));
        }
        self.train.validate()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds of one repetition, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionSeeds {
    pub undersample_train: u64,
    pub undersample_test: u64,
    pub split: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl RepetitionSeeds {
    pub fn derive(master: u64, repetition: usize) -> Self {
        let base = splitmix64(master ^ splitmix64(repetition as u64));
        let s = |k: u64| splitmix64(base.wrapping_add(k));
        Self {
            undersample_train: s(1),
            undersample_test: s(2),
            split: s(3),
            init: s(4),
            shuffle: s(5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Stat,
    pub precision: Stat,
    pub recall: Stat,
    pub f_score: Stat,
}

impl Aggregate {
    pub fn of(reps: &[RepetitionRecord]) -> Self {
        let col = |f: fn(&MetricsReport) -> f64| {
            Stat::of(&reps.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        Self {
            accuracy: col(|m| m.accuracy),
            precision: col(|m| m.precision),
            recall: col(|m| m.recall),
            f_score: col(|m| m.f_score),
        }
    }
}

/// A trial identified by subject and window index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialId {
    pub subject: String,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub index: usize,
    pub seeds: RepetitionSeeds,
    pub train_trials: Vec<TrialId>,
    pub test_trials: Vec<TrialId>,
    pub loss_history: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub config: ExperimentConfig,
    /// Every other setting in effect (feature extraction, inputs), as resolved key/value pairs.
    pub resolved_config: BTreeMap<String, String>,
    pub repetitions: Vec<RepetitionRecord>,
    pub aggregate: Aggregate,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} | {} repetitions | train_fraction {} | seed {}",
            self.config.mode,
            self.config.architecture,
            self.config.repetitions,
            self.config.train_fraction,
            self.config.seed
        );
        let _ = writeln!(
            out,
            "{:>4} {:>4} {:>4} {:>4} {:>4} {:>8} {:>9} {:>8} {:>8}",
            "rep", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f_score"
        );
        for r in &self.repetitions {
            let (c, m) = (&r.confusion, &r.metrics);
            let _ = writeln!(
                out,
                "{:>4} {:>4} {:>4} {:>4} {:>4} {:>8.4} {:>9.4} {:>8.4} {:>8.4}",
                r.index, c.tp, c.fp, c.fn_, c.tn, m.accuracy, m.precision, m.recall, m.f_score
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "mean {:>23.4} {:>9.4} {:>8.4} {:>8.4}",
            a.accuracy.mean, a.precision.mean, a.recall.mean, a.f_score.mean
        );
        let _ = writeln!(
            out,
            "std  {:>23.4} {:>9.4} {:>8.4} {:>8.4}",
            a.accuracy.std, a.precision.std, a.recall.std, a.f_score.std
        );
        out
    }
}

fn ids<T>(set: &[TrialFeatures<T>]) -> Vec<TrialId> {
    set.iter()
        .map(|t| TrialId {
            subject: t.subject_id.clone(),
            trial: t.trial_index,
        })
        .collect()
}

fn to_samples<T: Scalar>(set: &[TrialFeatures<T>], norm: &Normalizer<T>) -> Vec<SeqSample<T>> {
    set.iter().map(|t| norm.apply(t).to_sample()).collect()
}

fn fit_and_score<T: Scalar>(
    train_set: &[TrialFeatures<T>],
    test_set: &[TrialFeatures<T>],
    cfg: &ExperimentConfig,
    index: usize,
    seeds: RepetitionSeeds,
) -> Result<RepetitionRecord> {
    let norm = if cfg.normalize {
        fit_normalizer(train_set)?
    } else {
        Normalizer::identity()
    };
    let model = init_architecture::<T>(cfg.architecture, cfg.hidden_dim, seeds.init)?;
    let tcfg = TrainConfig {
        seed: seeds.shuffle,
        ..cfg.train.clone()
    };
    let (model, loss_history) = train(&model, &to_samples(train_set, &norm), &tcfg)?;
    let confusion = evaluate(&model, &to_samples(test_set, &norm))?;
    Ok(RepetitionRecord {
        index,
        seeds,
        train_trials: ids(train_set),
        test_trials: ids(test_set),
        loss_history,
        metrics: metrics(&confusion)?,
        confusion,
    })
}

fn report(cfg: &ExperimentConfig, repetitions: Vec<RepetitionRecord>) -> ExperimentReport {
    ExperimentReport {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        resolved_config: Default::default(),
        aggregate: Aggregate::of(&repetitions),
        repetitions,
    }
}

/// Train and test on disjoint parts of one subject's trials.
pub fn run_intra<T: Scalar>(
    dataset: &[TrialFeatures<T>],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cfg = &ExperimentConfig {
        mode: Mode::Intra,
        ..cfg.clone()
    };
    let reps = (0..cfg.repetitions)
        .map(|r| {
            let seeds = RepetitionSeeds::derive(cfg.seed, r);
            let balanced = undersample(dataset, seeds.undersample_train)?;
            let (train_set, test_set) = random_split(&balanced, cfg.train_fraction, seeds.split)?;
            fit_and_score(&train_set, &test_set, cfg, r, seeds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(cfg, reps))
}

/// Train on all of one subject's balanced trials, test on another's.
pub fn run_inter<T: Scalar>(
    train_dataset: &[TrialFeatures<T>],
    test_dataset: &[TrialFeatures<T>],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cfg = &ExperimentConfig {
        mode: Mode::Inter,
        ..cfg.clone()
    };
    let reps = (0..cfg.repetitions)
        .map(|r| {
            let seeds = RepetitionSeeds::derive(cfg.seed, r);
            let train_set = undersample(train_dataset, seeds.undersample_train)?;
            let test_set = undersample(test_dataset, seeds.undersample_test)?;
            fit_and_score(&train_set, &test_set, cfg, r, seeds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(cfg, reps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tool_version: String,
    pub rows: Vec<(Architecture, ExperimentReport)>,
}

impl ComparisonReport {
    pub fn get(&self, arch: Architecture) -> Option<&ExperimentReport> {
        self.rows.iter().find(|(a, _)| *a == arch).map(|(_, r)| r)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<8} {:>10} {:>8} {:>10} {:>8}\n",
            "arch", "acc_mean", "acc_std", "f_mean", "f_std"
        );
        for (arch, r) in &self.rows {
            let a = &r.aggregate;
            let _ = writeln!(
                out,
                "{:<8} {:>10.4} {:>8.4} {:>10.4} {:>8.4}",
                arch, a.accuracy.mean, a.accuracy.std, a.f_score.mean, a.f_score.std
            );
        }
        out
    }
}

/// Runs every architecture with the same seeds, hence identical data splits.
/// `test_dataset` selects inter-subject mode.
pub fn compare_architectures<T: Scalar>(
    dataset: &[TrialFeatures<T>],
    test_dataset: Option<&[TrialFeatures<T>]>,
    cfg: &ExperimentConfig,
) -> Result<ComparisonReport> {
    let rows = Architecture::ALL
        .iter()
        .map(|&architecture| {
            let c = ExperimentConfig {
                architecture,
                ..cfg.clone()
            };
            let r = match test_dataset {
                None => run_intra(dataset, &c)?,
                Some(test) => run_inter(dataset, test, &c)?,
            };
            Ok((architecture, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        tool_version: TOOL_VERSION.to_string(),
        rows,
    })
}
