pub mod bounds;
pub mod cli;
pub mod csvio;
pub mod dependence;
pub mod empirical;
pub mod error;
pub mod frechet;
pub mod gaussian;
pub mod generators;
pub mod mc;
pub mod metrics;
pub mod measure;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
