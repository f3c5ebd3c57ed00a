//! Linear-chain conditional random field: exact inference, elastic-net
//! training and Viterbi decoding.

pub mod lattice;
mod model;
pub mod objective;
pub mod owlqn;
mod train;

pub use lattice::{backward, forward, marginals, viterbi, Lattice, Marginals};
pub use model::{CrfModel, ParamLayout};
pub use objective::{nll_and_gradient, Instance, TrainingSet};
pub use owlqn::StopReason;
pub use train::{train, train_with, Checkpoint, GradientEvaluator, SequentialEvaluator, TrainConfig, Trained};
