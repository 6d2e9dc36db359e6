pub mod ansatz;
pub mod bits;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod groundtruth;
pub mod measurement;
pub mod neural;
pub mod pauli;
pub mod rng;
pub mod simulator;
pub mod training;

pub use error::{Error, Result};
