//! Stability lab for smooth Degasperis-Procesi solitary waves.

pub mod dispersion;
pub mod error;
pub mod evans;
pub mod evolve;
pub mod kernel;
pub mod lax;
pub mod ode;
pub mod poly;
pub mod quad;
pub mod spectral;
pub mod wave;

pub use error::{Error, Result};
