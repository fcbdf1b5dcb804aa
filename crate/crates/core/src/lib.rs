//! Piecewise adiabatic passage from a single level into a chosen
//! superposition of excited levels, driven by a spectrally shaped,
//! piecewise-chirped multi-mode field.
//!
//! Units throughout: ħ = 1, time in fs, energies and frequencies in rad/fs.

pub mod adiabatic;
pub mod analysis;
pub mod bloch;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod pulse;

pub use error::{Error, Result};
