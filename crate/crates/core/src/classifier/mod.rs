//! Linear-softmax reference models over word embeddings, trained with
//! optional noise-channel composition on weakly labeled data.

mod embeddings;
mod model;
mod train;

pub use embeddings::EmbeddingTable;
pub use model::{
    compute_loss_and_gradients, init_model, output_labels, Decision, Gradients, Model, Predictions,
};
pub use train::{
    evaluate, selection_score, train, train_with, EpochRecord, NoiseHandling, TrainSchedule,
    Trainer,
};
