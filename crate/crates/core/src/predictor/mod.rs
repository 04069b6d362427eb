//! Learned cost surrogate and the nearest-neighbour screening baseline.

mod dataset;
mod knn;
mod mlp;

pub use dataset::{Dataset, Sample};
pub use knn::{knn_screen, KnnRule};
pub use mlp::{mlp_train, Dense, MlpModel, Optimizer, TrainConfig, TrainReport};
