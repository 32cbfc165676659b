use eegerr::eeg_io::TrialLabel;
use eegerr::experiment::{
    compare_architectures, f1, metrics, run_inter, run_intra, ConfusionMatrix, ExperimentConfig,
};
use eegerr::featurize::TrialFeatures;
use eegerr::nn::{Architecture, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(subject: &str, n: usize, sep: f64, seed: u64) -> Vec<TrialFeatures<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = if i % 4 == 0 {
                TrialLabel::Err
            } else {
                TrialLabel::Ok
            };
            let shift = if label == TrialLabel::Err { sep } else { -sep };
            TrialFeatures {
                subject_id: subject.into(),
                trial_index: i,
                label,
                matrix: (0..5)
                    .map(|_| {
                        std::array::from_fn(|j| {
                            rng.random_range(-1.0..1.0) + if j < 2 { shift } else { 0.0 }
                        })
                    })
                    .collect(),
            }
        })
        .collect()
}

fn quick() -> ExperimentConfig {
    ExperimentConfig {
        repetitions: 3,
        hidden_dim: 4,
        seed: 21,
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

proptest! {
    #[test]
    fn metrics_agree_with_their_definitions(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let cm = ConfusionMatrix { tp, fp, tn, fn_ };
        let m = metrics(&cm).unwrap();
        let total = (tp + fp + tn + fn_) as f64;
        prop_assert!((m.accuracy - (tp + tn) as f64 / total).abs() < 1e-15);
        prop_assert_eq!(m.precision_undefined, tp + fp == 0);
        prop_assert_eq!(m.recall_undefined, tp + fn_ == 0);
        if tp > 0 {
            // F1 = 2tp / (2tp + fp + fn) is the count form of the harmonic mean
            let direct = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
            prop_assert!((m.f_score - direct).abs() < 1e-12);
        } else {
            prop_assert_eq!(m.f_score, 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&m.f_score));
        prop_assert!(m.f_score <= m.precision.max(m.recall) + 1e-15);
        prop_assert!(m.f_score >= m.precision.min(m.recall) - 1e-15);
    }

    #[test]
    fn f1_is_symmetric_and_bounded(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        prop_assert_eq!(f1(p, r), f1(r, p));
        prop_assert!(f1(p, r) <= p.max(r) + 1e-15);
    }
}

#[test]
fn intra_runs_are_reproducible_and_seed_sensitive() {
    let data = dataset("s", 120, 0.8, 1);
    let a = run_intra(&data, &quick()).unwrap();
    let b = run_intra(&data, &quick()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = run_intra(
        &data,
        &ExperimentConfig {
            seed: 22,
            ..quick()
        },
    )
    .unwrap();
    assert_ne!(a.repetitions[0].test_trials, c.repetitions[0].test_trials);
}

#[test]
fn intra_splits_are_balanced_disjoint_and_vary_by_repetition() {
    let data = dataset("s", 120, 0.8, 1);
    let report = run_intra(&data, &quick()).unwrap();
    // 30 ERR trials -> 30 + 30 after balancing; round(0.75 * 30) = round(22.5) = 23 per class
    // for training (halves round away from zero)
    for rep in &report.repetitions {
        assert_eq!(rep.train_trials.len(), 46);
        assert_eq!(rep.test_trials.len(), 14);
        assert!(rep
            .test_trials
            .iter()
            .all(|t| !rep.train_trials.contains(t)));
        let cm = rep.confusion;
        assert_eq!(cm.tp + cm.fn_, 7);
        assert_eq!(cm.tn + cm.fp, 7);
    }
    assert_ne!(
        report.repetitions[0].test_trials,
        report.repetitions[1].test_trials
    );
}

#[test]
fn inter_tests_on_the_whole_balanced_second_subject() {
    let train = dataset("a", 80, 0.8, 2);
    let test = dataset("b", 60, 0.8, 3);
    let report = run_inter(&train, &test, &quick()).unwrap();
    for rep in &report.repetitions {
        assert!(rep.train_trials.iter().all(|t| t.subject == "a"));
        assert!(rep.test_trials.iter().all(|t| t.subject == "b"));
        // 15 ERR in the second subject, balanced against 15 OK
        assert_eq!(rep.confusion.total(), 30);
    }
}

#[test]
fn comparison_uses_identical_splits_for_every_architecture() {
    let data = dataset("s", 80, 0.8, 4);
    let cmp = compare_architectures(&data, None, &quick()).unwrap();
    let archs: Vec<Architecture> = cmp.rows.iter().map(|(a, _)| *a).collect();
    assert_eq!(archs, Architecture::ALL.to_vec());
    let base = &cmp.rows[0].1;
    for (arch, r) in &cmp.rows {
        assert_eq!(r.config.architecture, *arch);
        for (x, y) in r.repetitions.iter().zip(&base.repetitions) {
            assert_eq!(x.train_trials, y.train_trials);
            assert_eq!(x.test_trials, y.test_trials);
            assert_eq!(x.seeds, y.seeds);
        }
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let data = dataset("s", 40, 0.8, 5);
    for cfg in [
        ExperimentConfig {
            repetitions: 0,
            ..quick()
        },
        ExperimentConfig {
            train_fraction: 1.0,
            ..quick()
        },
        ExperimentConfig {
            hidden_dim: 0,
            ..quick()
        },
    ] {
        assert_eq!(run_intra(&data, &cfg).unwrap_err().exit_code(), 2);
    }
    let only_ok: Vec<TrialFeatures<f64>> = data
        .into_iter()
        .filter(|t| t.label == TrialLabel::Ok)
        .collect();
    assert!(run_intra(&only_ok, &quick()).is_err());
}
