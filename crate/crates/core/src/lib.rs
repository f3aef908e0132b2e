//! Domain-adversarial training with a gradient reversal layer, landmark
//! driven virtual pose synthesis, and an ablation harness for single sample
//! per person recognition.

pub mod adversarial;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod nn;
pub mod pose;

pub use error::{Error, Result};
