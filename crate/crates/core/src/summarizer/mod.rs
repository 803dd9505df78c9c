//! Graph-augmented code summarizer: model, training, BLEU-a and model files.

pub mod bleu;
pub mod gradcheck;
pub mod io;
pub mod model;
pub mod tensor;
pub mod train;

pub use bleu::{bleu_a, BleuError};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, ModelIoError};
pub use model::{EncodedInput, ModelDims, ModelError, Params, SummarizerModel};
pub use tensor::Tensor;
pub use train::{evaluate, train, EpochRecord, TrainError, TrainingConfig, TrainingReport};

pub const DEFAULT_MAX_DECODE: usize = 20;
