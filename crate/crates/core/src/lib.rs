pub mod analysis;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod priors;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
