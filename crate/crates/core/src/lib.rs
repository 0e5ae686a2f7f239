pub mod abi;
pub mod analysis;
pub mod bytecode;
pub mod error;
pub mod fuzz;
pub mod guidance;
pub mod oracles;
pub mod report;
pub mod scalar;
pub mod state;
pub mod symbolic;
pub mod targets;
pub mod vm;
pub mod word;

pub use error::{Error, Result};

/// Distances and fitness as computed during campaigns.
pub type Distance = f64;
/// Exact counterpart of [`Distance`].
pub type ExactDistance = num_rational::BigRational;
pub type DistanceMap = guidance::DistanceMap<Distance>;
pub type FitnessParams = guidance::FitnessParams<Distance>;
