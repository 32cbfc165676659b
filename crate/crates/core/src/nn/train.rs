use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eeg_io::TrialLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::adam::AdamState;
use super::network::{backward, cross_entropy, forward, SeqSample};
use super::params::{Model, N_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 16,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.eps > 0.0)
        {
            return Err(Error::Config(
                "adam betas must lie in [0, 1) and eps must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Mini-batch Adam training. Returns the trained model and the mean training
/// loss of each epoch (measured on the batches as they were visited).
pub fn train<T: Scalar>(
    model: &Model<T>,
    data: &[SeqSample<T>],
    cfg: &TrainConfig,
) -> Result<(Model<T>, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let mut model = model.clone();
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = model.zeros_like();
            for &i in batch {
                let (probs, cache) = forward(&model, &data[i])?;
                let loss = cross_entropy(&probs, data[i].label).as_f64();
                if !loss.is_finite() {
                    return Err(Error::Divergence(format!(
                        "non-finite loss in epoch {epoch}, sample {i}"
                    )));
                }
                total += loss;
                let g = backward(&model, &data[i], &cache)?;
                for (acc, gi) in grad.tensors_mut().into_iter().zip(g.tensors()) {
                    for (a, b) in acc.iter_mut().zip(gi) {
                        *a += *b;
                    }
                }
            }
            let scale = T::one() / T::of_usize(batch.len());
            for t in grad.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= scale);
            }
            state.update(&mut model, &grad, cfg)?;
        }
        history.push(total / data.len() as f64);
    }
    Ok((model, history))
}

/// Class with the larger probability; an exact tie goes to OK.
pub fn predict<T: Scalar>(
    model: &Model<T>,
    sample: &SeqSample<T>,
) -> Result<(TrialLabel, [T; N_CLASSES])> {
    let (probs, _) = forward(model, sample)?;
    Ok((label_of(&probs), probs))
}

pub fn label_of<T: Scalar>(probs: &[T; N_CLASSES]) -> TrialLabel {
    if probs[1] > probs[0] {
        TrialLabel::Err
    } else {
        TrialLabel::Ok
    }
}
