pub mod analysis;
pub mod catalog;
pub mod covariance;
pub mod error;
pub mod kernels;
mod numerics;
pub mod ou;
pub mod quad;
pub mod real;
pub mod simulate;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
