//! Bosonic Gaussian channels: complete positivity, PPT, entanglement breaking
//! and nonclassicality breaking, with the squeezing filters relating the last
//! two and a single-mode phase-space oracle.

pub mod channel;
pub mod document;
pub mod duality;
pub mod eb;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod rng;
pub mod state;
pub mod symplectic;

pub use error::{Error, Result};
