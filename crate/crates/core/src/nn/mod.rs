//! Recurrent sequence classifiers (LSTM, GRU, bidirectional LSTM) with exact
//! BPTT gradients, Adam and finite-difference gradient checking.

mod adam;
mod checkpoint;
mod gradcheck;
mod network;
mod params;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, NormalizerRecord, TensorRecord, CHECKPOINT_FORMAT_VERSION};
pub use gradcheck::grad_check;
pub use network::{
    backward, cross_entropy, forward, loss_and_gradient, softmax, ForwardCache, SeqSample,
};
pub use params::{
    init_architecture, init_model, init_model_with_input, Architecture, CellKind, Model,
    RecurrentParams, DEFAULT_HIDDEN_DIM, N_CLASSES,
};
pub use train::{label_of, predict, train, TrainConfig};
