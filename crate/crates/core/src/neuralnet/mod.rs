//! Small dense and 1-D convolutional networks with exact backpropagation
//! and Adam training.

pub mod engine;
pub mod infer;
pub mod optim;
pub mod params;
pub mod spec;
pub mod train;

pub use engine::{backward, forward, predict, ForwardCache, Gradients};
pub use infer::{decode_output, infer_channel, infer_channels};
pub use optim::{adam_step, mse_loss, AdamState, TrainConfig};
pub use params::{NetworkParams, ParamTensors};
pub use spec::{
    build_ce_dnn, build_ce_dnn_with, build_se_dnn, build_se_dnn_with, Activation, CeDnnWidths, Layer,
    NetworkSpec, Shape, CE_KERNEL, SE_HIDDEN,
};
pub use train::{
    dataset_arrays, evaluate_loss, train, train_arrays, EarlyStopping, EpochRecord, StopReason, TrainHistory,
    Verdict,
};
