//! Batch command surface: `eegerr <command> [flags]`.
//!
//! Every command is deterministic in its seed. Outputs are written atomically.
//! JSON outputs embed the tool version and the resolved configuration; fixed
//! formats (EEGC, CSV) get a `<file>.meta.json` sidecar carrying the same.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{load_config, load_kv, RunConfig};

use crate::eeg_io::{
    load_annotations, load_recording, save_annotations, save_recording, segment_trials,
    synth_dataset, SynthSpec,
};
use crate::error::{Error, Result};
use crate::experiment::{
    compare_architectures, run_inter, run_intra, undersample, ExperimentReport,
};
use crate::featurize::{
    features_from_csv, features_to_csv, featurize_trials, fit_normalizer, Normalizer, TrialFeatures,
};
use crate::fsio::{read_to_string, write_atomic};
use crate::kv::KvFile;
use crate::nn::{grad_check, init_architecture, train, Architecture, Checkpoint, SeqSample};
use crate::TOOL_VERSION;

#[derive(Debug, Parser)]
#[command(
    name = "eegerr",
    version,
    about = "Detect performance errors in EEG recordings"
)]
struct Cli {
    /// Master seed; overrides `seed` in any config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    arch: Option<Architecture>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct DataInput {
    /// Recording (EEGC); requires --ann.
    #[arg(long, requires = "ann", conflicts_with = "features")]
    eeg: Option<PathBuf>,
    /// Annotation CSV for --eeg.
    #[arg(long, requires = "eeg")]
    ann: Option<PathBuf>,
    /// Precomputed feature CSV instead of --eeg/--ann.
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TestInput {
    #[arg(long, requires = "test_ann", conflicts_with = "test_features")]
    test_eeg: Option<PathBuf>,
    #[arg(long, requires = "test_eeg")]
    test_ann: Option<PathBuf>,
    #[arg(long)]
    test_features: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic recording and its annotations.
    Synth {
        /// Synthetic spec (key=value); every key but `seed` is optional.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_eeg: PathBuf,
        #[arg(long)]
        out_ann: PathBuf,
    },
    /// Segment a recording and write per-trial feature matrices.
    Featurize {
        #[command(flatten)]
        input: DataInput,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on all balanced trials and write a checkpoint.
    Train {
        #[command(flatten)]
        input: DataInput,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated intra-subject evaluation.
    Intra {
        #[command(flatten)]
        input: DataInput,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_summary: Option<PathBuf>,
    },
    /// Train on one subject, evaluate on another.
    Inter {
        #[command(flatten)]
        input: DataInput,
        #[command(flatten)]
        test: TestInput,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_summary: Option<PathBuf>,
    },
    /// Run bilstm, lstm and gru on identical splits.
    Compare {
        #[command(flatten)]
        input: DataInput,
        /// Optional second subject; switches to inter-subject mode.
        #[command(flatten)]
        test: TestInput,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_summary: Option<PathBuf>,
    },
    /// Compare analytic gradients against central differences on random tiny models.
    Gradcheck {
        /// Architecture to check; all three when omitted.
        #[arg(long)]
        arch: Option<Architecture>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 3)]
        hidden: usize,
        #[arg(long, default_value_t = 4)]
        length: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the Mel filterbank as `filter,bin,weight` CSV.
    InspectFilterbank {
        #[arg(long, default_value_t = 2500.0)]
        sample_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct Meta<'a> {
    tool_version: &'a str,
    command: &'a str,
    resolved_config: BTreeMap<String, String>,
}

fn pairs(kv: &KvFile) -> BTreeMap<String, String> {
    kv.iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn write_meta(path: &Path, command: &str, kv: &KvFile) -> Result<()> {
    let meta = Meta {
        tool_version: TOOL_VERSION,
        command,
        resolved_config: pairs(kv),
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    write_atomic(Path::new(&name), text.as_bytes())
}

/// Config file (if any) with command-line overrides applied.
fn raw_config(cli: &Cli, overrides: Option<&Overrides>) -> Result<KvFile> {
    let mut kv = match &cli.config {
        Some(p) => load_kv(p)?,
        None => KvFile::default(),
    };
    if let Some(s) = cli.seed {
        kv.set("seed", s);
    }
    if let Some(o) = overrides {
        if let Some(a) = o.arch {
            kv.set("architecture", a);
        }
        if let Some(f) = o.train_fraction {
            kv.set("train_fraction", f);
        }
        if let Some(r) = o.repetitions {
            kv.set("repetitions", r);
        }
        if let Some(e) = o.epochs {
            kv.set("epochs", e);
        }
    }
    Ok(kv)
}

fn resolve(cli: &Cli, overrides: Option<&Overrides>) -> Result<RunConfig> {
    RunConfig::from_kv(&raw_config(cli, overrides)?)
}

fn load_features(
    eeg: Option<&PathBuf>,
    ann: Option<&PathBuf>,
    features: Option<&PathBuf>,
    offset_s: f64,
    cfg: &RunConfig,
) -> Result<Vec<TrialFeatures<f64>>> {
    match (eeg, ann, features) {
        (_, _, Some(f)) => features_from_csv(&read_to_string(f)?),
        (Some(e), Some(a), None) => {
            let rec = load_recording(e)?;
            let track = load_annotations(a)?;
            featurize_trials(&segment_trials(&rec, &track, offset_s), &cfg.features)
        }
        _ => Err(Error::InvalidArgument(
            "give either --features or both --eeg and --ann".into(),
        )),
    }
}

fn input_features(input: &DataInput, cfg: &RunConfig) -> Result<Vec<TrialFeatures<f64>>> {
    load_features(
        input.eeg.as_ref(),
        input.ann.as_ref(),
        input.features.as_ref(),
        cfg.offset_s,
        cfg,
    )
}

fn test_features(test: &TestInput, cfg: &RunConfig) -> Result<Option<Vec<TrialFeatures<f64>>>> {
    if test.test_eeg.is_none() && test.test_features.is_none() {
        return Ok(None);
    }
    load_features(
        test.test_eeg.as_ref(),
        test.test_ann.as_ref(),
        test.test_features.as_ref(),
        cfg.test_offset_s,
        cfg,
    )
    .map(Some)
}

fn write_report(
    report: &mut ExperimentReport,
    cfg: &RunConfig,
    out: &Path,
    summary: Option<&PathBuf>,
) -> Result<()> {
    report.resolved_config = pairs(&cfg.to_kv());
    write_atomic(out, report.to_json().as_bytes())?;
    if let Some(s) = summary {
        write_atomic(s, report.summary().as_bytes())?;
    }
    Ok(())
}

fn cmd_synth(cli: &Cli, spec: Option<&PathBuf>, out_eeg: &Path, out_ann: &Path) -> Result<String> {
    let mut kv = match spec.or(cli.config.as_ref()) {
        Some(p) => load_kv(p)?,
        None => KvFile::default(),
    };
    if let Some(s) = cli.seed {
        kv.set("seed", s);
    }
    let spec = SynthSpec::from_kv(&kv)?;
    let (rec, track) = synth_dataset(&spec)?;
    save_recording(&rec, out_eeg)?;
    save_annotations(&track, out_ann)?;
    let resolved = spec.to_kv();
    write_meta(out_eeg, "synth", &resolved)?;
    write_meta(out_ann, "synth", &resolved)?;
    Ok(format!(
        "synth: {} channels x {} samples, {} events -> {}, {}",
        rec.n_channels(),
        rec.n_samples(),
        track.events().len(),
        out_eeg.display(),
        out_ann.display()
    ))
}

fn cmd_train(cfg: &RunConfig, feats: &[TrialFeatures<f64>], out: &Path) -> Result<String> {
    let e = &cfg.experiment;
    let balanced = undersample(feats, cfg.seed)?;
    let norm = if e.normalize {
        fit_normalizer(&balanced)?
    } else {
        Normalizer::identity()
    };
    let samples: Vec<SeqSample<f64>> = balanced.iter().map(|t| norm.apply(t).to_sample()).collect();
    let model = init_architecture::<f64>(e.architecture, e.hidden_dim, cfg.seed)?;
    let (model, history) = train(&model, &samples, &e.train)?;
    let mut ck = Checkpoint::from_model(&model, Some(&norm), cfg.seed);
    ck.resolved_config = pairs(&cfg.to_kv());
    write_atomic(out, ck.to_json().as_bytes())?;
    Ok(format!(
        "train: {} on {} balanced trials, final loss {:.4} -> {}",
        e.architecture,
        samples.len(),
        history.last().copied().unwrap_or(f64::NAN),
        out.display()
    ))
}

#[derive(Serialize)]
struct GradcheckRow {
    architecture: Architecture,
    instances: usize,
    max_relative_error: f64,
    passed: bool,
}

#[derive(Serialize)]
struct GradcheckReport {
    tool_version: &'static str,
    resolved_config: BTreeMap<String, String>,
    rows: Vec<GradcheckRow>,
}

/// Worst relative gradient error over `instances` random models and sequences.
pub fn gradcheck_suite(
    arch: Architecture,
    instances: usize,
    hidden: usize,
    length: usize,
    eps: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let model = init_architecture::<f64>(arch, hidden, rng.random())?;
        let sample = SeqSample {
            sequence: (0..length)
                .map(|_| {
                    (0..model.input_dim())
                        .map(|_| rng.random_range(-2.0..2.0))
                        .collect()
                })
                .collect(),
            label: rng.random_range(0..2),
        };
        worst = worst.max(grad_check(&model, &sample, eps)?);
    }
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn cmd_gradcheck(
    seed: u64,
    arch: Option<Architecture>,
    instances: usize,
    hidden: usize,
    length: usize,
    eps: f64,
    tolerance: f64,
    out: Option<&PathBuf>,
) -> Result<String> {
    if instances == 0 || hidden == 0 || length == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "instances, hidden, length and eps must be positive".into(),
        ));
    }
    let archs = match arch {
        Some(a) => vec![a],
        None => Architecture::ALL.to_vec(),
    };
    let rows = archs
        .into_iter()
        .map(|a| {
            let err = gradcheck_suite(a, instances, hidden, length, eps, seed)?;
            Ok(GradcheckRow {
                architecture: a,
                instances,
                max_relative_error: err,
                passed: err < tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut kv = KvFile::default();
    kv.set("seed", seed);
    kv.set("instances", instances);
    kv.set("hidden", hidden);
    kv.set("length", length);
    kv.set("eps", eps);
    kv.set("tolerance", tolerance);
    let line = rows
        .iter()
        .map(|r| format!("{} {:.3e}", r.architecture, r.max_relative_error))
        .collect::<Vec<_>>()
        .join(", ");
    let failed = rows.iter().any(|r| !r.passed);
    if let Some(path) = out {
        let report = GradcheckReport {
            tool_version: TOOL_VERSION,
            resolved_config: pairs(&kv),
            rows,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    if failed {
        return Err(Error::Divergence(format!(
            "gradient check above tolerance {tolerance}: {line}"
        )));
    }
    Ok(format!("gradcheck: {line}"))
}

fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Synth {
            spec,
            out_eeg,
            out_ann,
        } => cmd_synth(cli, spec.as_ref(), out_eeg, out_ann),
        Command::Featurize { input, out } => {
            let cfg = resolve(cli, None)?;
            let feats = input_features(input, &cfg)?;
            write_atomic(out, features_to_csv(&feats).as_bytes())?;
            write_meta(out, "featurize", &cfg.to_kv())?;
            Ok(format!(
                "featurize: {} trials -> {}",
                feats.len(),
                out.display()
            ))
        }
        Command::Train {
            input,
            overrides,
            out,
        } => {
            let cfg = resolve(cli, Some(overrides))?;
            cmd_train(&cfg, &input_features(input, &cfg)?, out)
        }
        Command::Intra {
            input,
            overrides,
            out,
            out_summary,
        } => {
            let cfg = resolve(cli, Some(overrides))?;
            let mut report = run_intra(&input_features(input, &cfg)?, &cfg.experiment)?;
            write_report(&mut report, &cfg, out, out_summary.as_ref())?;
            Ok(format!(
                "intra: mean accuracy {:.4} -> {}",
                report.aggregate.accuracy.mean,
                out.display()
            ))
        }
        Command::Inter {
            input,
            test,
            overrides,
            out,
            out_summary,
        } => {
            let cfg = resolve(cli, Some(overrides))?;
            let train_set = input_features(input, &cfg)?;
            let test_set = test_features(test, &cfg)?.ok_or_else(|| {
                Error::InvalidArgument(
                    "inter needs --test-eeg/--test-ann or --test-features".into(),
                )
            })?;
            let mut report = run_inter(&train_set, &test_set, &cfg.experiment)?;
            write_report(&mut report, &cfg, out, out_summary.as_ref())?;
            Ok(format!(
                "inter: mean accuracy {:.4} -> {}",
                report.aggregate.accuracy.mean,
                out.display()
            ))
        }
        Command::Compare {
            input,
            test,
            overrides,
            out,
            out_summary,
        } => {
            let cfg = resolve(cli, Some(overrides))?;
            let data = input_features(input, &cfg)?;
            let test_set = test_features(test, &cfg)?;
            let mut cmp = compare_architectures(&data, test_set.as_deref(), &cfg.experiment)?;
            let resolved = pairs(&cfg.to_kv());
            for (_, r) in &mut cmp.rows {
                r.resolved_config = resolved.clone();
            }
            write_atomic(out, cmp.to_json().as_bytes())?;
            if let Some(s) = out_summary {
                write_atomic(s, cmp.summary().as_bytes())?;
            }
            let line = cmp
                .rows
                .iter()
                .map(|(a, r)| format!("{a} {:.4}", r.aggregate.accuracy.mean))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(format!("compare: {line} -> {}", out.display()))
        }
        Command::Gradcheck {
            arch,
            instances,
            hidden,
            length,
            eps,
            tolerance,
            out,
        } => {
            let seed = resolve_seed(cli)?;
            cmd_gradcheck(
                seed,
                *arch,
                *instances,
                *hidden,
                *length,
                *eps,
                *tolerance,
                out.as_ref(),
            )
        }
        Command::InspectFilterbank { sample_rate, out } => {
            let cfg = resolve(cli, None)?;
            let fb = cfg.features.filterbank::<f64>(*sample_rate)?;
            write_atomic(out, fb.to_csv().as_bytes())?;
            let mut kv = cfg.to_kv();
            kv.set("sample_rate_hz", sample_rate);
            write_meta(out, "inspect-filterbank", &kv)?;
            Ok(format!(
                "inspect-filterbank: {} filters, n_dft {}, boundary bins {:?} -> {}",
                fb.num_filters,
                fb.n_dft,
                fb.boundary_bins,
                out.display()
            ))
        }
    }
}

fn resolve_seed(cli: &Cli) -> Result<u64> {
    match cli.seed {
        Some(s) => Ok(s),
        None => raw_config(cli, None)?.require("seed"),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status:
/// 0 success, 2 configuration error, 3 data error, 4 numerical divergence.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
