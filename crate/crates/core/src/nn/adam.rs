use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::Model;
use super::train::TrainConfig;

/// First and second moment estimates, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Model<T>,
    pub v: Model<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &Model<T>) -> Self {
        Self {
            m: model.zeros_like(),
            v: model.zeros_like(),
            step: 0,
        }
    }

    /// Applies one bias-corrected Adam update in place.
    pub fn update(
        &mut self,
        model: &mut Model<T>,
        grads: &Model<T>,
        cfg: &TrainConfig,
    ) -> Result<()> {
        if !model.same_shape(grads) || !model.same_shape(&self.m) {
            return Err(Error::DimensionMismatch(
                "adam: gradient/state shapes differ from model".into(),
            ));
        }
        self.step += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.eps);
        let t = self.step as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(grads.tensors()) {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::update`].
pub fn adam_step<T: Scalar>(
    model: &Model<T>,
    grads: &Model<T>,
    state: &AdamState<T>,
    cfg: &TrainConfig,
) -> Result<(Model<T>, AdamState<T>)> {
    let mut model = model.clone();
    let mut state = state.clone();
    state.update(&mut model, grads, cfg)?;
    Ok((model, state))
}
