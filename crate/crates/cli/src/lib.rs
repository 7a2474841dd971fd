//! Library side of the `rosetta` command: signal files, test signals,
//! noise, and the denoising methods.

pub mod csv;
pub mod error;
pub mod generate;
pub mod methods;
pub mod noise;

pub use error::{CliError, Result};
