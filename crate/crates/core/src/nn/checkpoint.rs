//! JSON checkpoints: architecture, flat tensors with explicit shapes, and the
//! feature normalizer the model was trained with.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::{Normalizer, FEATURES_PER_CHANNEL};
use crate::scalar::Scalar;
use crate::TOOL_VERSION;

use super::params::{CellKind, Model};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerRecord {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub tool_version: String,
    pub kind: CellKind,
    pub bidirectional: bool,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub tensors: Vec<TensorRecord>,
    pub normalizer: Option<NormalizerRecord>,
    /// Settings the model was produced with, as resolved key/value pairs.
    #[serde(default)]
    pub resolved_config: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(
        model: &Model<T>,
        normalizer: Option<&Normalizer<T>>,
        seed: u64,
    ) -> Self {
        let tensors = model
            .tensor_specs()
            .into_iter()
            .zip(model.tensors())
            .map(|((name, shape), data)| TensorRecord {
                name,
                shape,
                data: data.iter().map(|v| v.as_f64()).collect(),
            })
            .collect();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            kind: model.kind(),
            bidirectional: model.bidirectional(),
            input_dim: model.input_dim(),
            hidden_dim: model.hidden_dim(),
            seed,
            tensors,
            normalizer: normalizer.map(|n| NormalizerRecord {
                means: n.means.iter().map(|v| v.as_f64()).collect(),
                stds: n.stds.iter().map(|v| v.as_f64()).collect(),
            }),
            resolved_config: Default::default(),
        }
    }

    /// Rebuilds the model, checking the format version and every tensor shape.
    pub fn to_model<T: Scalar>(&self) -> Result<(Model<T>, Option<Normalizer<T>>)> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Checkpoint("zero input or hidden dimension".into()));
        }
        let mut model = Model::zeros(
            self.kind,
            self.bidirectional,
            self.input_dim,
            self.hidden_dim,
        );
        let specs = model.tensor_specs();
        if specs.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                specs.len(),
                self.tensors.len()
            )));
        }
        for ((name, shape), (dst, rec)) in specs
            .iter()
            .zip(model.tensors_mut().into_iter().zip(&self.tensors))
        {
            if &rec.name != name || &rec.shape != shape || rec.data.len() != dst.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {:?} {:?} ({} values) does not match expected {name:?} {shape:?}",
                    rec.name,
                    rec.shape,
                    rec.data.len()
                )));
            }
            if rec.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!(
                    "tensor {name:?} has non-finite values"
                )));
            }
            for (d, s) in dst.iter_mut().zip(&rec.data) {
                *d = T::of(*s);
            }
        }
        let normalizer = match &self.normalizer {
            None => None,
            Some(n) => {
                if n.means.len() != FEATURES_PER_CHANNEL || n.stds.len() != FEATURES_PER_CHANNEL {
                    return Err(Error::Checkpoint(
                        "normalizer must have 13 means and 13 stds".into(),
                    ));
                }
                if n.stds.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Checkpoint("normalizer stds must be positive".into()));
                }
                Some(Normalizer {
                    means: std::array::from_fn(|j| T::of(n.means[j])),
                    stds: std::array::from_fn(|j| T::of(n.stds[j])),
                })
            }
        };
        Ok((model, normalizer))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_model;

    #[test]
    fn round_trip_is_exact() {
        let m = init_model::<f64>(CellKind::Lstm, true, 20, 17).unwrap();
        let norm = Normalizer {
            means: std::array::from_fn(|j| j as f64 * 0.1 + 1e-17),
            stds: std::array::from_fn(|j| 1.0 / (j as f64 + 3.0)),
        };
        let text = Checkpoint::from_model(&m, Some(&norm), 17).to_json();
        let ck = Checkpoint::from_json(&text).unwrap();
        let (m2, n2) = ck.to_model::<f64>().unwrap();
        assert_eq!(m, m2);
        assert_eq!(Some(norm), n2);
        assert_eq!(ck.seed, 17);
        assert_eq!(text, ck.to_json());
    }

    #[test]
    fn bad_shapes_and_versions_rejected() {
        let m = init_model::<f64>(CellKind::Gru, false, 4, 1).unwrap();
        let ck = Checkpoint::from_model(&m, None, 1);
        let mut v = ck.clone();
        v.format_version = 99;
        assert!(v.to_model::<f64>().is_err());
        let mut s = ck.clone();
        s.tensors[0].shape = vec![3, 13];
        assert!(s.to_model::<f64>().is_err());
        let mut d = ck.clone();
        d.tensors[1].data.pop();
        assert!(d.to_model::<f64>().is_err());
        let mut b = ck;
        b.bidirectional = true;
        assert!(b.to_model::<f64>().is_err());
        assert!(Checkpoint::from_json("{").is_err());
    }
}
