//! Metric embedding learned with triplet loss and batch-hard mining.

mod loss;
mod mining;
mod model;
mod persist;
mod train;

pub use loss::{triplet_loss, triplet_loss_gradient, TripletGradient};
pub use mining::{mine_triplets, Triplet};
pub use model::{
    Activation, DenseLayer, Embedder, EmbedderModel, Gradients, PrecomputedEmbedder,
    DEFAULT_EMBEDDING_DIM, DEFAULT_HIDDEN,
};
pub use persist::{MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use train::{
    batch_objective, train, train_with_history, EpochStats, TrainingConfig, DEFAULT_MARGIN,
};
