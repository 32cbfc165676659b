use serde::{Deserialize, Serialize};

use crate::eeg_io::TrialLabel;
use crate::error::{Error, Result};
use crate::nn::{predict, Model, SeqSample};
use crate::scalar::Scalar;

/// Counts with ERR as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, actual: TrialLabel, predicted: TrialLabel) {
        match (actual, predicted) {
            (TrialLabel::Err, TrialLabel::Err) => self.tp += 1,
            (TrialLabel::Ok, TrialLabel::Err) => self.fp += 1,
            (TrialLabel::Err, TrialLabel::Ok) => self.fn_ += 1,
            (TrialLabel::Ok, TrialLabel::Ok) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (TrialLabel, TrialLabel)>) -> Self {
        let mut cm = Self::default();
        for (a, p) in pairs {
            cm.record(a, p);
        }
        cm
    }
}

/// Ratios derived from a [`ConfusionMatrix`]. A ratio whose denominator is
/// zero is reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f_score_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::Empty("confusion matrix has no entries".into()));
    }
    let (accuracy, _) = ratio(cm.tp + cm.tn, cm.total());
    let (precision, precision_undefined) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, recall_undefined) = ratio(cm.tp, cm.tp + cm.fn_);
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f_score: f1(precision, recall),
        precision_undefined,
        recall_undefined,
        f_score_undefined: precision + recall == 0.0,
    })
}

pub fn evaluate<T: Scalar>(model: &Model<T>, test: &[SeqSample<T>]) -> Result<ConfusionMatrix> {
    if test.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for s in test {
        let actual = TrialLabel::from_class_index(s.label).ok_or_else(|| {
            Error::DimensionMismatch(format!("label {} is not a class index", s.label))
        })?;
        let (predicted, _) = predict(model, s)?;
        cm.record(actual, predicted);
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use TrialLabel::{Err as E, Ok as O};

    #[test]
    fn hand_computed() {
        let cm = ConfusionMatrix {
            tp: 3,
            fp: 1,
            fn_: 2,
            tn: 4,
        };
        let m = metrics(&cm).unwrap();
        assert_abs_diff_eq!(m.accuracy, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(m.precision, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(m.recall, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m.f_score, 2.0 / 3.0, epsilon = 1e-12);
        assert!(!m.precision_undefined && !m.recall_undefined);
    }

    #[test]
    fn degenerate_precision_is_flagged() {
        let m = metrics(&ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 5,
            tn: 5,
        })
        .unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.precision_undefined);
        assert_eq!(m.recall, 0.0);
        assert!(!m.recall_undefined);
        assert!(m.f_score_undefined);
        assert!(metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let actual = [E, E, E, E, E, O, O, O, O, O];
        let perfect = ConfusionMatrix::from_pairs(actual.iter().map(|&a| (a, a)));
        assert_eq!(
            perfect,
            ConfusionMatrix {
                tp: 5,
                fp: 0,
                fn_: 0,
                tn: 5
            }
        );
        let constant = ConfusionMatrix::from_pairs(actual.iter().map(|&a| (a, O)));
        assert_eq!(
            constant,
            ConfusionMatrix {
                tp: 0,
                fp: 0,
                fn_: 5,
                tn: 5
            }
        );
    }

    #[test]
    fn random_predictor_is_at_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cm = ConfusionMatrix::from_pairs((0..10_000).map(|i| {
            let a = if i % 2 == 0 { E } else { O };
            (a, if rng.random_bool(0.5) { E } else { O })
        }));
        let acc = metrics(&cm).unwrap().accuracy;
        assert!((acc - 0.5).abs() <= 0.02, "{acc}");
    }

    #[test]
    fn f1_identity() {
        assert_abs_diff_eq!(f1(0.8065, 0.7576), 0.7813, epsilon = 5e-4);
        assert_abs_diff_eq!(f1(0.6250, 0.5882), 0.6061, epsilon = 5e-4);
        assert_eq!(f1(0.0, 0.0), 0.0);
    }
}
