pub mod cli;
pub mod composite;
pub mod divergence;
pub mod el_core;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod special;

pub use error::{ElError, Result};
