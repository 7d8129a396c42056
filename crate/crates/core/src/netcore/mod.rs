//! Fully connected ReLU networks: traced forward passes, exact backpropagation,
//! minibatch SGD and a bit-exact checkpoint format.

mod checkpoint;
mod mlp;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointMeta, MAGIC};
pub use mlp::{backward, BatchBackward, BiasMode, ForwardTrace, Gradients, Mlp};
pub use train::{train, TrainConfig, TrainOutcome};
