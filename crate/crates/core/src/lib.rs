pub mod bidder;
pub mod blinding;
pub mod brent;
pub mod center;
pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod rules;

pub use error::{Error, Result};
