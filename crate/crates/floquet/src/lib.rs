//! Asymptotic Floquet exponents for weakly modulated linear periodic systems.

pub mod error;
pub mod expansion;
pub mod fourier;
pub mod models;
pub mod cli;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
