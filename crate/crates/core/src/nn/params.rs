use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::FEATURES_PER_CHANNEL;
use crate::scalar::Scalar;

pub const DEFAULT_HIDDEN_DIM: usize = 20;
pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// LSTM gates are ordered `[i, f, g, o]`, GRU gates `[r, z, n]`.
    pub fn n_gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        })
    }
}

/// The three networks compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Bilstm,
    Lstm,
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 3] =
        [Architecture::Bilstm, Architecture::Lstm, Architecture::Gru];

    pub fn kind(self) -> CellKind {
        match self {
            Architecture::Bilstm | Architecture::Lstm => CellKind::Lstm,
            Architecture::Gru => CellKind::Gru,
        }
    }

    pub fn bidirectional(self) -> bool {
        self == Architecture::Bilstm
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Bilstm => "bilstm",
            Architecture::Lstm => "lstm",
            Architecture::Gru => "gru",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilstm" => Ok(Architecture::Bilstm),
            "lstm" => Ok(Architecture::Lstm),
            "gru" => Ok(Architecture::Gru),
            _ => Err(Error::Config(format!(
                "unknown architecture {s:?} (expected bilstm|lstm|gru)"
            ))),
        }
    }
}

/// One recurrent layer. Weight matrices are row-major with one row per
/// gate unit: `w_input` is `(G·H) × D`, `w_recurrent` is `(G·H) × H`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentParams<T> {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_input: Vec<T>,
    pub w_recurrent: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> RecurrentParams<T> {
    pub fn zeros(kind: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        let rows = kind.n_gates() * hidden_dim;
        Self {
            kind,
            input_dim,
            hidden_dim,
            w_input: vec![T::zero(); rows * input_dim],
            w_recurrent: vec![T::zero(); rows * hidden_dim],
            bias: vec![T::zero(); rows],
        }
    }

    pub fn gate_rows(&self) -> usize {
        self.kind.n_gates() * self.hidden_dim
    }

    fn random(kind: CellKind, input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(kind, input_dim, hidden_dim);
        let a = 1.0 / (hidden_dim as f64).sqrt();
        for w in p.w_input.iter_mut().chain(p.w_recurrent.iter_mut()) {
            *w = T::of(rng.random_range(-a..=a));
        }
        if kind == CellKind::Lstm {
            p.bias[hidden_dim..2 * hidden_dim].fill(T::one());
        }
        p
    }
}

/// Recurrent layer (optionally bidirectional) followed by a dense 2-way softmax head.
///
/// The dense layer sees `[h_fwd(N); h_bwd(1)]`, i.e. the final state of each
/// direction. `dense_w` is `2 × feat_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub recurrent: RecurrentParams<T>,
    pub recurrent_bwd: Option<RecurrentParams<T>>,
    pub dense_w: Vec<T>,
    pub dense_b: Vec<T>,
}

impl<T: Scalar> Model<T> {
    pub fn zeros(kind: CellKind, bidirectional: bool, input_dim: usize, hidden_dim: usize) -> Self {
        let feat = if bidirectional {
            2 * hidden_dim
        } else {
            hidden_dim
        };
        Self {
            recurrent: RecurrentParams::zeros(kind, input_dim, hidden_dim),
            recurrent_bwd: bidirectional
                .then(|| RecurrentParams::zeros(kind, input_dim, hidden_dim)),
            dense_w: vec![T::zero(); N_CLASSES * feat],
            dense_b: vec![T::zero(); N_CLASSES],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.kind(),
            self.bidirectional(),
            self.input_dim(),
            self.hidden_dim(),
        )
    }

    pub fn kind(&self) -> CellKind {
        self.recurrent.kind
    }

    pub fn bidirectional(&self) -> bool {
        self.recurrent_bwd.is_some()
    }

    pub fn input_dim(&self) -> usize {
        self.recurrent.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent.hidden_dim
    }

    /// Width of the dense layer input.
    pub fn feat_dim(&self) -> usize {
        self.dense_w.len() / N_CLASSES
    }

    /// Tensor names and shapes, in the same order as [`Model::tensors`].
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut push_layer = |prefix: &str, p: &RecurrentParams<T>| {
            out.push((
                format!("{prefix}.w_input"),
                vec![p.gate_rows(), p.input_dim],
            ));
            out.push((
                format!("{prefix}.w_recurrent"),
                vec![p.gate_rows(), p.hidden_dim],
            ));
            out.push((format!("{prefix}.bias"), vec![p.gate_rows()]));
        };
        push_layer("fwd", &self.recurrent);
        if let Some(b) = &self.recurrent_bwd {
            push_layer("bwd", b);
        }
        out.push(("dense.w".into(), vec![N_CLASSES, self.feat_dim()]));
        out.push(("dense.b".into(), vec![N_CLASSES]));
        out
    }

    pub fn tensors(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = vec![
            &self.recurrent.w_input,
            &self.recurrent.w_recurrent,
            &self.recurrent.bias,
        ];
        if let Some(b) = &self.recurrent_bwd {
            v.extend([b.w_input.as_slice(), &b.w_recurrent, &b.bias]);
        }
        v.push(&self.dense_w);
        v.push(&self.dense_b);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let Model {
            recurrent,
            recurrent_bwd,
            dense_w,
            dense_b,
        } = self;
        let mut v: Vec<&mut [T]> = vec![
            &mut recurrent.w_input,
            &mut recurrent.w_recurrent,
            &mut recurrent.bias,
        ];
        if let Some(b) = recurrent_bwd {
            v.extend([b.w_input.as_mut_slice(), &mut b.w_recurrent, &mut b.bias]);
        }
        v.push(dense_w);
        v.push(dense_b);
        v
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.tensor_specs() == other.tensor_specs() && self.kind() == other.kind()
    }

    pub(crate) fn hash_into(&self, h: &mut impl Hasher) {
        self.kind().hash(h);
        self.bidirectional().hash(h);
        for t in self.tensors() {
            t.len().hash(h);
            for v in t {
                v.as_f64().to_bits().hash(h);
            }
        }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash_into(&mut h);
        h.finish()
    }
}

/// Seeded initialization: weights uniform in `±1/√hidden_dim`, LSTM forget bias 1, other biases 0.
pub fn init_model<T: Scalar>(
    kind: CellKind,
    bidirectional: bool,
    hidden_dim: usize,
    seed: u64,
) -> Result<Model<T>> {
    init_model_with_input(kind, bidirectional, FEATURES_PER_CHANNEL, hidden_dim, seed)
}

pub fn init_model_with_input<T: Scalar>(
    kind: CellKind,
    bidirectional: bool,
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
) -> Result<Model<T>> {
    if hidden_dim == 0 || input_dim == 0 {
        return Err(Error::InvalidArgument(
            "hidden_dim and input_dim must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let recurrent = RecurrentParams::random(kind, input_dim, hidden_dim, &mut rng);
    let recurrent_bwd =
        bidirectional.then(|| RecurrentParams::random(kind, input_dim, hidden_dim, &mut rng));
    let feat = if bidirectional {
        2 * hidden_dim
    } else {
        hidden_dim
    };
    let a = 1.0 / (hidden_dim as f64).sqrt();
    let dense_w = (0..N_CLASSES * feat)
        .map(|_| T::of(rng.random_range(-a..=a)))
        .collect();
    Ok(Model {
        recurrent,
        recurrent_bwd,
        dense_w,
        dense_b: vec![T::zero(); N_CLASSES],
    })
}

pub fn init_architecture<T: Scalar>(
    arch: Architecture,
    hidden_dim: usize,
    seed: u64,
) -> Result<Model<T>> {
    init_model(arch.kind(), arch.bidirectional(), hidden_dim, seed)
}
