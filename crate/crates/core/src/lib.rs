//! Quasiprobability path sampling of noisy qudit circuits in the Weyl basis,
//! Weyl randomized benchmarking with its estimators, local noise fitting and
//! simulation-cost bounds.

pub mod alias;
pub mod dense;
pub mod error;
pub mod io;
pub mod noise;
pub mod noisefit;
pub mod pathsampler;
pub mod reps;
pub mod vqe;
pub mod wrb;
pub mod weyl;

pub use error::{Error, Result};
