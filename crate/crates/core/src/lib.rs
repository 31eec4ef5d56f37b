//! Graph neural networks whose propagation operators are learnable
//! mixtures of smoothing and sharpening, plus the spectral and energy
//! diagnostics used to study over-smoothing.

pub mod data;
pub mod error;
pub mod graph;
pub mod layers;
pub mod rng;
pub mod spectral;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
