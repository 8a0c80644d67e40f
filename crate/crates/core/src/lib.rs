pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fft;
pub mod pipeline;
pub mod preprocess;
pub mod signal_io;
pub mod stats;
pub mod synth;
pub mod ta_envelope;

pub use error::{Error, Result};
