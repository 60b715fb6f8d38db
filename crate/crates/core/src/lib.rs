//! Spectra and pseudospectra of periodic Jacobi operators through their
//! matrix symbols.
//!
//! Everything here is `no_std` (with `alloc`). File formats, the CLI and
//! parallel field sweeps live in the `borgspec` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod decompose;
pub mod borg;
pub mod connectivity;
pub mod fdm;
pub mod field;
pub mod spectral;
pub mod linalg;
pub mod operator;

pub use error::{Error, Result};
pub use num_complex::Complex64;
