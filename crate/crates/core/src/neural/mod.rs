//! Small reverse-mode gradient engine, Adam, and the ANN demapper.

mod adam;
mod ann;
mod checkpoint;
mod dense;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use ann::{
    ann_batch_gradients, ann_demap, ann_loss, ann_train_epoch, AnnModel, AnnVars, Precision,
    ANN_LAYERS,
};
pub use checkpoint::Checkpoint;
pub use dense::{argmax, cross_entropy, log_softmax, softmax, DenseLayer, DenseVars};
pub use tape::{superspike, Gradients, Tape, Var};
pub use tensor::Tensor;
