use eegerr::eeg_io::{segment_trials, synth_dataset, SynthSpec, TrialLabel};
use eegerr::featurize::{
    features_from_csv, features_to_csv, featurize_trials, fit_normalizer, FeatureConfig, Reducer,
    TrialFeatures, FEATURES_PER_CHANNEL,
};

fn dataset(separation: f64, seed: u64) -> Vec<TrialFeatures<f64>> {
    let spec = SynthSpec {
        n_channels: 8,
        duration_s: 120.0,
        class_separation: separation,
        error_fraction: 0.4,
        seed,
        ..SynthSpec::default()
    };
    let (rec, track) = synth_dataset(&spec).unwrap();
    featurize_trials(
        &segment_trials(&rec, &track, 0.0),
        &FeatureConfig::default(),
    )
    .unwrap()
}

/// Largest standardized class-mean difference over every (channel, feature) cell.
fn best_separation(feats: &[TrialFeatures<f64>]) -> f64 {
    let n_ch = feats[0].n_channels();
    let mut best = 0.0f64;
    for c in 0..n_ch {
        for f in 0..FEATURES_PER_CHANNEL {
            let pick = |l: TrialLabel| -> Vec<f64> {
                feats
                    .iter()
                    .filter(|t| t.label == l)
                    .map(|t| t.matrix[c][f])
                    .collect()
            };
            let (ok, err) = (pick(TrialLabel::Ok), pick(TrialLabel::Err));
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let var =
                |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
            let (mo, me) = (mean(&ok), mean(&err));
            let pooled = ((var(&ok, mo) + var(&err, me)) / 2.0).sqrt();
            best = best.max((mo - me).abs() / pooled);
        }
    }
    best
}

#[test]
fn strong_separation_shows_up_in_the_features() {
    let strong = best_separation(&dataset(2.0, 1));
    let none = best_separation(&dataset(0.0, 1));
    assert!(strong > 3.0, "strong separation gives only {strong}");
    assert!(none < 1.2, "no separation still gives {none}");
}

#[test]
fn feature_matrix_shape_and_finiteness() {
    let feats = dataset(1.0, 2);
    assert!(!feats.is_empty());
    for t in &feats {
        assert_eq!(t.matrix.len(), 8);
        for row in &t.matrix {
            assert_eq!(row.len(), FEATURES_PER_CHANNEL);
            assert!(row.iter().all(|v| v.is_finite()));
            // instantaneous frequency lies inside the analysed band
            assert!(row[0] > 0.0 && row[0] < 1250.0, "{}", row[0]);
            // entropy is non-negative and bounded by log2 of the bin count
            assert!(row[1] >= 0.0 && row[1] <= (257f64).log2() + 1e-9);
        }
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let feats = dataset(1.0, 3);
    let back: Vec<TrialFeatures<f64>> = features_from_csv(&features_to_csv(&feats)).unwrap();
    assert_eq!(back, feats);
}

#[test]
fn normalizer_standardizes_the_training_set() {
    let feats = dataset(1.0, 4);
    let norm = fit_normalizer(&feats).unwrap();
    let z: Vec<TrialFeatures<f64>> = feats.iter().map(|t| norm.apply(t)).collect();
    // statistics are pooled over every channel row, per feature column
    let rows: Vec<&[f64; FEATURES_PER_CHANNEL]> = z.iter().flat_map(|t| t.matrix.iter()).collect();
    let n = rows.len() as f64;
    for f in 0..FEATURES_PER_CHANNEL {
        let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9, "feature {f}: mean {mean}");
        assert!(
            (var.sqrt() - 1.0).abs() < 1e-6,
            "feature {f}: std {}",
            var.sqrt()
        );
    }
}

#[test]
fn median_reducer_agrees_in_shape_and_differs_in_value() {
    let spec = SynthSpec {
        n_channels: 3,
        duration_s: 10.0,
        seed: 5,
        ..SynthSpec::default()
    };
    let (rec, track) = synth_dataset(&spec).unwrap();
    let trials = segment_trials(&rec, &track, 0.0);
    let mean: Vec<TrialFeatures<f64>> =
        featurize_trials(&trials, &FeatureConfig::default()).unwrap();
    let cfg = FeatureConfig {
        reducer: Reducer::Median,
        ..FeatureConfig::default()
    };
    let median: Vec<TrialFeatures<f64>> = featurize_trials(&trials, &cfg).unwrap();
    assert_eq!(mean.len(), median.len());
    assert!(mean.iter().zip(&median).any(|(a, b)| a.matrix != b.matrix));
}

#[test]
fn single_precision_features_track_double() {
    let spec = SynthSpec {
        n_channels: 2,
        duration_s: 5.0,
        seed: 6,
        ..SynthSpec::default()
    };
    let (rec, track) = synth_dataset(&spec).unwrap();
    let trials = segment_trials(&rec, &track, 0.0);
    let a: Vec<TrialFeatures<f64>> = featurize_trials(&trials, &FeatureConfig::default()).unwrap();
    let b: Vec<TrialFeatures<f32>> = featurize_trials(&trials, &FeatureConfig::default()).unwrap();
    for (ta, tb) in a.iter().zip(&b) {
        for (ra, rb) in ta.matrix.iter().zip(&tb.matrix) {
            for (va, vb) in ra.iter().zip(rb) {
                assert!(
                    (va - *vb as f64).abs() <= 1e-3 * va.abs().max(1.0),
                    "{va} vs {vb}"
                );
            }
        }
    }
}
