//! Fairness auditing for small feedforward binary classifiers.

pub mod data;
pub mod error;
pub mod fsio;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod monitor;
pub mod sensitivity;
pub mod stats;
pub mod stream;
pub mod synth;
pub mod tape;
pub mod tensor;

pub use data::{EncodedDataset, FeatureSchema};
pub use error::{Error, Result};
pub use model::{MlpModel, ModelArtifact, TrainParams};
pub use tape::{Gradients, LeafKind, NodeId, Tape};
pub use tensor::Tensor;
