pub mod analysis;
pub mod association;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod graphcolor;
pub mod rng;
pub mod simrunner;
pub mod topology;

pub use error::{Error, Result};
