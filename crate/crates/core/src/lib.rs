//! Tomographic representation of free-particle states.

pub mod dynamics;
pub mod error;
pub mod grids;
pub mod io;
pub mod quantumness;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
