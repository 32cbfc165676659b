//! Forward pass, cross-entropy and backpropagation through time.

use std::hash::{DefaultHasher, Hash, Hasher};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::{CellKind, Model, RecurrentParams, N_CLASSES};

/// A channel sequence of feature vectors and its class index (0 = OK, 1 = ERR).
#[derive(Debug, Clone, PartialEq)]
pub struct SeqSample<T> {
    pub sequence: Vec<Vec<T>>,
    pub label: usize,
}

impl<T: Scalar> SeqSample<T> {
    fn hash_into(&self, h: &mut impl Hasher) {
        self.label.hash(h);
        for x in &self.sequence {
            x.len().hash(h);
            for v in x {
                v.as_f64().to_bits().hash(h);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache<T> {
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    /// Post-activation gates: `[i, f, g, o]` or `[r, z, n]`.
    gates: Vec<T>,
    /// LSTM: `tanh(c_t)`. GRU: `U_n h_{t-1}`.
    aux: Vec<T>,
}

#[derive(Debug, Clone)]
struct DirectionCache<T> {
    steps: Vec<StepCache<T>>,
    h_final: Vec<T>,
}

/// Activations of one forward call, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    fwd: DirectionCache<T>,
    bwd: Option<DirectionCache<T>>,
    feat: Vec<T>,
    probs: [T; N_CLASSES],
    key: u64,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn probs(&self) -> [T; N_CLASSES] {
        self.probs
    }

    /// Final hidden state of the forward direction, `h_fwd(N)`.
    pub fn forward_state(&self) -> &[T] {
        &self.fwd.h_final
    }

    /// Final hidden state of the backward direction, `h_bwd(1)`.
    pub fn backward_state(&self) -> Option<&[T]> {
        self.bwd.as_ref().map(|d| d.h_final.as_slice())
    }
}

fn cache_key<T: Scalar>(model: &Model<T>, sample: &SeqSample<T>) -> u64 {
    let mut h = DefaultHasher::new();
    model.hash_into(&mut h);
    sample.hash_into(&mut h);
    h.finish()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `out += W x` for row-major `W` with `x.len()` columns.
fn matvec_acc<T: Scalar>(out: &mut [T], w: &[T], x: &[T]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut s = T::zero();
        for (a, b) in row.iter().zip(x) {
            s += *a * *b;
        }
        *o += s;
    }
}

/// `out += Wᵀ y`.
fn matvec_t_acc<T: Scalar>(out: &mut [T], w: &[T], y: &[T]) {
    let cols = out.len();
    for (yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if *yi == T::zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += *yi * *a;
        }
    }
}

/// `g += y xᵀ`.
fn outer_acc<T: Scalar>(g: &mut [T], y: &[T], x: &[T]) {
    let cols = x.len();
    for (yi, row) in y.iter().zip(g.chunks_exact_mut(cols)) {
        for (gv, xv) in row.iter_mut().zip(x) {
            *gv += *yi * *xv;
        }
    }
}

fn run_direction<'a, T: Scalar + 'a>(
    p: &RecurrentParams<T>,
    xs: impl Iterator<Item = &'a Vec<T>>,
) -> DirectionCache<T> {
    let hd = p.hidden_dim;
    let mut h = vec![T::zero(); hd];
    let mut c = vec![T::zero(); hd];
    let mut steps = Vec::new();
    for x in xs {
        let mut pre = p.bias.clone();
        matvec_acc(&mut pre, &p.w_input, x);
        match p.kind {
            CellKind::Lstm => {
                matvec_acc(&mut pre, &p.w_recurrent, &h);
                let mut gates = pre;
                let mut aux = vec![T::zero(); hd];
                let mut c_new = vec![T::zero(); hd];
                let mut h_new = vec![T::zero(); hd];
                for k in 0..hd {
                    let i = sigmoid(gates[k]);
                    let f = sigmoid(gates[hd + k]);
                    let g = gates[2 * hd + k].tanh();
                    let o = sigmoid(gates[3 * hd + k]);
                    gates[k] = i;
                    gates[hd + k] = f;
                    gates[2 * hd + k] = g;
                    gates[3 * hd + k] = o;
                    c_new[k] = f * c[k] + i * g;
                    aux[k] = c_new[k].tanh();
                    h_new[k] = o * aux[k];
                }
                steps.push(StepCache {
                    h_prev: std::mem::replace(&mut h, h_new),
                    c_prev: std::mem::replace(&mut c, c_new),
                    gates,
                    aux,
                });
            }
            CellKind::Gru => {
                let mut a = vec![T::zero(); 3 * hd];
                matvec_acc(&mut a, &p.w_recurrent, &h);
                let mut gates = pre;
                let mut h_new = vec![T::zero(); hd];
                for k in 0..hd {
                    let r = sigmoid(gates[k] + a[k]);
                    let z = sigmoid(gates[hd + k] + a[hd + k]);
                    let n = (gates[2 * hd + k] + r * a[2 * hd + k]).tanh();
                    gates[k] = r;
                    gates[hd + k] = z;
                    gates[2 * hd + k] = n;
                    h_new[k] = (T::one() - z) * n + z * h[k];
                }
                steps.push(StepCache {
                    h_prev: std::mem::replace(&mut h, h_new),
                    c_prev: Vec::new(),
                    gates,
                    aux: a.split_off(2 * hd),
                });
            }
        }
    }
    DirectionCache { steps, h_final: h }
}

fn check_dims<T: Scalar>(model: &Model<T>, sample: &SeqSample<T>) -> Result<()> {
    if sample.sequence.is_empty() {
        return Err(Error::DimensionMismatch("empty sequence".into()));
    }
    let d = model.input_dim();
    if let Some((i, x)) = sample
        .sequence
        .iter()
        .enumerate()
        .find(|(_, x)| x.len() != d)
    {
        return Err(Error::DimensionMismatch(format!(
            "sequence element {i} has {} features, model expects {d}",
            x.len()
        )));
    }
    if sample.label >= N_CLASSES {
        return Err(Error::DimensionMismatch(format!(
            "label {} is not a class index",
            sample.label
        )));
    }
    Ok(())
}

/// Numerically stable two-way softmax.
pub fn softmax<T: Scalar>(logits: [T; N_CLASSES]) -> [T; N_CLASSES] {
    let m = logits[0].max(logits[1]);
    let e = logits.map(|l| (l - m).exp());
    let s = e[0] + e[1];
    e.map(|v| v / s)
}

/// Runs the network; the returned cache is only valid for this exact `(model, sample)`.
pub fn forward<T: Scalar>(
    model: &Model<T>,
    sample: &SeqSample<T>,
) -> Result<([T; N_CLASSES], ForwardCache<T>)> {
    check_dims(model, sample)?;
    let fwd = run_direction(&model.recurrent, sample.sequence.iter());
    let bwd = model
        .recurrent_bwd
        .as_ref()
        .map(|p| run_direction(p, sample.sequence.iter().rev()));

    let hd = model.hidden_dim();
    let mut feat = fwd.h_final.clone();
    if let Some(b) = &bwd {
        feat.extend_from_slice(&b.h_final);
    }
    // Each direction's contribution is summed separately and then added, so
    // mirroring the model and the input reproduces the logits bit for bit.
    let fd = model.feat_dim();
    let logits: [T; N_CLASSES] = std::array::from_fn(|o| {
        let row = &model.dense_w[o * fd..(o + 1) * fd];
        let dot = |r: &[T], x: &[T]| r.iter().zip(x).fold(T::zero(), |s, (a, b)| s + *a * *b);
        let mut s = dot(&row[..hd], &feat[..hd]);
        if fd > hd {
            s += dot(&row[hd..], &feat[hd..]);
        }
        model.dense_b[o] + s
    });
    let probs = softmax(logits);
    if !probs.iter().chain(&feat).all(|v| v.is_finite()) {
        return Err(Error::Divergence(format!(
            "non-finite activation (logits {logits:?})"
        )));
    }
    let cache = ForwardCache {
        fwd,
        bwd,
        feat,
        probs,
        key: cache_key(model, sample),
    };
    Ok((probs, cache))
}

/// `−ln p[label]`, with the probability floored at 1e-15.
pub fn cross_entropy<T: Scalar>(probs: &[T; N_CLASSES], label: usize) -> T {
    -probs[label].max(T::of(1e-15)).ln()
}

fn backprop_direction<'a, T: Scalar + 'a>(
    p: &RecurrentParams<T>,
    xs: &[&'a Vec<T>],
    cache: &DirectionCache<T>,
    dh_final: &[T],
    grad: &mut RecurrentParams<T>,
) {
    let hd = p.hidden_dim;
    let mut dh = dh_final.to_vec();
    let mut dc = vec![T::zero(); hd];
    let one = T::one();
    for (step, x) in cache.steps.iter().zip(xs).rev() {
        let mut dpre = vec![T::zero(); p.gate_rows()];
        let mut dh_prev = vec![T::zero(); hd];
        match p.kind {
            CellKind::Lstm => {
                let g = &step.gates;
                for k in 0..hd {
                    let (i, f, gg, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
                    let tc = step.aux[k];
                    let dck = dc[k] + dh[k] * o * (one - tc * tc);
                    dpre[k] = dck * gg * i * (one - i);
                    dpre[hd + k] = dck * step.c_prev[k] * f * (one - f);
                    dpre[2 * hd + k] = dck * i * (one - gg * gg);
                    dpre[3 * hd + k] = dh[k] * tc * o * (one - o);
                    dc[k] = dck * f;
                }
                outer_acc(&mut grad.w_recurrent, &dpre, &step.h_prev);
                matvec_t_acc(&mut dh_prev, &p.w_recurrent, &dpre);
            }
            CellKind::Gru => {
                let g = &step.gates;
                // Gradient w.r.t. the recurrent pre-activations; differs from
                // `dpre` only in the candidate block, which is gated by r.
                let mut da = vec![T::zero(); 3 * hd];
                for k in 0..hd {
                    let (r, z, n) = (g[k], g[hd + k], g[2 * hd + k]);
                    let dn = dh[k] * (one - z) * (one - n * n);
                    let dz = dh[k] * (step.h_prev[k] - n) * z * (one - z);
                    let dr = dn * step.aux[k] * r * (one - r);
                    dpre[k] = dr;
                    dpre[hd + k] = dz;
                    dpre[2 * hd + k] = dn;
                    da[k] = dr;
                    da[hd + k] = dz;
                    da[2 * hd + k] = dn * r;
                    dh_prev[k] = dh[k] * z;
                }
                outer_acc(&mut grad.w_recurrent, &da, &step.h_prev);
                matvec_t_acc(&mut dh_prev, &p.w_recurrent, &da);
            }
        }
        outer_acc(&mut grad.w_input, &dpre, x);
        for (b, d) in grad.bias.iter_mut().zip(&dpre) {
            *b += *d;
        }
        dh = dh_prev;
    }
}

/// Gradient of `cross_entropy(forward(model, sample), sample.label)` w.r.t. every parameter.
pub fn backward<T: Scalar>(
    model: &Model<T>,
    sample: &SeqSample<T>,
    cache: &ForwardCache<T>,
) -> Result<Model<T>> {
    check_dims(model, sample)?;
    if cache.key != cache_key(model, sample) {
        return Err(Error::StaleCache(
            "cache was produced by a different model or sample".into(),
        ));
    }
    let mut grad = model.zeros_like();
    let fd = model.feat_dim();
    let hd = model.hidden_dim();
    let mut dlogits = cache.probs;
    dlogits[sample.label] -= T::one();

    let mut dfeat = vec![T::zero(); fd];
    for (o, &dl) in dlogits.iter().enumerate() {
        grad.dense_b[o] = dl;
        for (j, df) in dfeat.iter_mut().enumerate() {
            grad.dense_w[o * fd + j] = dl * cache.feat[j];
            *df += model.dense_w[o * fd + j] * dl;
        }
    }

    let xs: Vec<&Vec<T>> = sample.sequence.iter().collect();
    backprop_direction(
        &model.recurrent,
        &xs,
        &cache.fwd,
        &dfeat[..hd],
        &mut grad.recurrent,
    );
    if let (Some(p), Some(c), Some(g)) = (&model.recurrent_bwd, &cache.bwd, &mut grad.recurrent_bwd)
    {
        let rev: Vec<&Vec<T>> = xs.iter().rev().copied().collect();
        backprop_direction(p, &rev, c, &dfeat[hd..], g);
    }
    Ok(grad)
}

/// Loss and gradient in one call.
pub fn loss_and_gradient<T: Scalar>(
    model: &Model<T>,
    sample: &SeqSample<T>,
) -> Result<(T, Model<T>)> {
    let (probs, cache) = forward(model, sample)?;
    let grad = backward(model, sample, &cache)?;
    Ok((cross_entropy(&probs, sample.label), grad))
}

#[cfg(test)]
mod tests {
    use super::super::params::init_model_with_input;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(n: usize, d: usize, label: usize) -> SeqSample<f64> {
        SeqSample {
            sequence: (0..n)
                .map(|i| {
                    (0..d)
                        .map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0)
                        .collect()
                })
                .collect(),
            label,
        }
    }

    #[test]
    fn zero_dense_gives_half() {
        let mut m = init_model_with_input::<f64>(CellKind::Lstm, true, 3, 4, 1).unwrap();
        m.dense_w.fill(0.0);
        let (p, _) = forward(&m, &sample(5, 3, 0)).unwrap();
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn softmax_closed_form() {
        let p = softmax([3f64.ln(), 0.0]);
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-15);
        let q = softmax([3f64.ln() + 40.0, 40.0]);
        assert_abs_diff_eq!(q[0], p[0], epsilon = 1e-12);
        let big = softmax([1000.0f64, -1000.0]);
        assert!(big.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[1.0f64, 0.0], 0), 0.0);
        assert_abs_diff_eq!(
            cross_entropy(&[0.5f64, 0.5], 1),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cross_entropy(&[0.75f64, 0.25], 1),
            4f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cross_entropy(&[1.0f64, 0.0], 1),
            -(1e-15f64).ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn palindrome_with_tied_directions() {
        for kind in [CellKind::Lstm, CellKind::Gru] {
            let mut m = init_model_with_input::<f64>(kind, true, 3, 2, 11).unwrap();
            m.recurrent_bwd = Some(m.recurrent.clone());
            let mut s = sample(3, 3, 1);
            s.sequence.push(s.sequence[1].clone());
            s.sequence.push(s.sequence[0].clone());
            let (_, cache) = forward(&m, &s).unwrap();
            assert_eq!(cache.forward_state(), cache.backward_state().unwrap());
        }
    }

    #[test]
    fn zero_everything_bias_gradient() {
        let m = Model::<f64>::zeros(CellKind::Lstm, true, 13, 20);
        let s = SeqSample {
            sequence: vec![vec![0.0; 13]; 61],
            label: 1,
        };
        let (_, g) = loss_and_gradient(&m, &s).unwrap();
        assert_eq!(g.dense_b, vec![0.5, -0.5]);
    }

    #[test]
    fn blocked_backward_path_has_zero_gradient() {
        let mut m = init_model_with_input::<f64>(CellKind::Lstm, true, 3, 4, 5).unwrap();
        let fd = m.feat_dim();
        for o in 0..2 {
            m.dense_w[o * fd + 4..(o + 1) * fd].fill(0.0);
        }
        let (_, g) = loss_and_gradient(&m, &sample(6, 3, 0)).unwrap();
        let b = g.recurrent_bwd.unwrap();
        assert!(b
            .w_input
            .iter()
            .chain(&b.w_recurrent)
            .chain(&b.bias)
            .all(|&v| v == 0.0));
        assert!(g.recurrent.w_input.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn stale_cache_rejected() {
        let m = init_model_with_input::<f64>(CellKind::Gru, false, 3, 4, 5).unwrap();
        let s = sample(4, 3, 0);
        let (_, cache) = forward(&m, &s).unwrap();
        let mut m2 = m.clone();
        m2.dense_b[0] = 0.1;
        assert!(matches!(
            backward(&m2, &s, &cache),
            Err(Error::StaleCache(_))
        ));
        let mut s2 = s.clone();
        s2.label = 1;
        assert!(matches!(
            backward(&m, &s2, &cache),
            Err(Error::StaleCache(_))
        ));
        assert!(backward(&m, &s, &cache).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let m = init_model_with_input::<f64>(CellKind::Gru, false, 3, 4, 5).unwrap();
        assert!(matches!(
            forward(&m, &sample(4, 2, 0)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(forward(
            &m,
            &SeqSample {
                sequence: vec![],
                label: 0
            }
        )
        .is_err());
        assert!(forward(&m, &sample(2, 3, 2)).is_err());
    }

    #[test]
    fn divergence_reported() {
        let mut m = init_model_with_input::<f64>(CellKind::Lstm, false, 3, 4, 5).unwrap();
        m.dense_b[0] = f64::NAN;
        assert!(matches!(
            forward(&m, &sample(3, 3, 0)),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn probabilities_form_simplex() {
        for seed in 0..20 {
            let m = init_model_with_input::<f64>(CellKind::Gru, true, 3, 5, seed).unwrap();
            let (p, _) = forward(&m, &sample(7, 3, 0)).unwrap();
            assert!(p[0] > 0.0 && p[1] > 0.0);
            assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
        }
    }
}
