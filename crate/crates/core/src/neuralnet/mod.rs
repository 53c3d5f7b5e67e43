//! Dependency-free CNN + biLSTM regression equalizer: exact reverse-mode
//! gradients, Adam, MSE loss, per-layer freezing and portable checkpoints.
//! Everything runs in f64 on one thread, so training is bit-reproducible.

mod adam;
mod checkpoint;
mod config;
mod model;
mod train;

pub use adam::{adam_step, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{decode as decode_checkpoint, encode as encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{Activation, EqualizerConfig, InitMode, TlStrategy, TrainConfig};
pub use model::{
    AdamState, BiLstmBlock, ConvBlock, DenseBlock, EqualizerModel, ForwardCache, Freeze, Gradients, LstmCell,
    ParamBlock, Params,
};
pub use train::{apply_tl_strategy, evaluate, mse, predict, strategy_freeze, train, TestSet};
