//! Training, layer transfer, and experiment kernel for convolutional text
//! classifiers.
//!
//! The crate builds a small sentence-classification CNN (embedding,
//! convolution, hidden, output layers), trains it with Adadelta, and lets a
//! trained checkpoint seed a second model layer by layer, with each layer
//! either fresh, frozen, or fine-tuned.

pub mod config;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod text;
pub mod train;
pub mod transfer;

pub use error::{Error, Result};
