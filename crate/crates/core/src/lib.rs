//! Linearized transmon in front of a mirror on a high-impedance line.
//!
//! All computations are in the unit system ω_J = 1, Z_J = 1 unless a type
//! says otherwise. The Fourier convention is selected with [`Convention`];
//! responses and poles use e^{−iωt} time dependence by default.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convention;
pub mod emission;
pub mod error;
pub mod fit;
pub mod grid;
pub mod hopfield;
pub mod params;
pub mod poles;
pub mod scattering;
pub mod spectrum;

pub use convention::Convention;
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use params::{dimensionless, CircuitParams, DerivedScales, Ratios};
