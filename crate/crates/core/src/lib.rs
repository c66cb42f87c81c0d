//! Frame-level melody harmonization.
//!
//! Lead sheets are encoded as four aligned sixteenth-note sequences (melody,
//! beat strength, key, chord). A bidirectional recurrent encoder summarizes
//! melody and meter/key context; a recurrent decoder emits one chord token per
//! frame. Decoding supports gamma rescaling of the previous chord's
//! probability, which trades harmonic stability against harmonic density.
//! The [`metrics`] module scores chord progressions against a melody.

pub mod decoding;
pub mod encoding;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod provenance;
pub mod scalar;
pub mod score;

pub use scalar::Scalar;

/// Single-precision model used for training and inference.
pub type Weights = model::ModelWeights<f32>;
/// Double-precision model used for gradient verification.
pub type Weights64 = model::ModelWeights<f64>;
