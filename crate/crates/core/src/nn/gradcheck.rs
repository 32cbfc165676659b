use crate::error::Result;
use crate::scalar::Scalar;

use super::network::{cross_entropy, forward, loss_and_gradient, SeqSample};
use super::params::Model;

/// Largest relative error `|a − n| / max(|a|, |n|, 1e-12)` between the analytic
/// gradient `a` and the central difference `n` over every parameter.
pub fn grad_check<T: Scalar>(model: &Model<T>, sample: &SeqSample<T>, eps: T) -> Result<T> {
    let (_, analytic) = loss_and_gradient(model, sample)?;
    let analytic: Vec<T> = analytic.tensors().into_iter().flatten().copied().collect();
    let loss = |m: &Model<T>| -> Result<T> {
        let (p, _) = forward(m, sample)?;
        Ok(cross_entropy(&p, sample.label))
    };

    let mut probe = model.clone();
    let lens: Vec<usize> = probe.tensors().iter().map(|t| t.len()).collect();
    let floor = T::of(1e-12);
    let mut worst = T::zero();
    let mut flat = 0;
    for (t, &len) in lens.iter().enumerate() {
        for k in 0..len {
            let orig = probe.tensors()[t][k];
            probe.tensors_mut()[t][k] = orig + eps;
            let up = loss(&probe)?;
            probe.tensors_mut()[t][k] = orig - eps;
            let down = loss(&probe)?;
            probe.tensors_mut()[t][k] = orig;
            let numeric = (up - down) / (eps + eps);
            let a = analytic[flat];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
            flat += 1;
        }
    }
    Ok(worst)
}
