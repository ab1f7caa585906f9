//! Sparse linear array design and fourth-order cumulant DOA estimation.
//!
//! The crate covers the full chain for the fourth-order generalized nested
//! array (FOGNA):
//!
//! * [`geometry`] builds physical sensor layouts (CNA, FOGNA, nested, ULA)
//!   and evaluates published DOF closed forms for competing arrays.
//! * [`coarray`] enumerates sum, difference and fourth-order co-arrays as
//!   exact integer multisets and measures their hole-free segments.
//! * [`optimizer`] searches the sensor split `(N1, N2, N3)` maximizing DOF.
//! * [`coupling`] builds the banded Toeplitz mutual coupling matrix.
//! * [`signalsim`] draws far-field snapshots for non-Gaussian sources.
//! * [`estimator`] estimates fourth-order cumulants, folds them onto the
//!   extended co-array and runs spatial-smoothing MUSIC.
//!
//! All positions are integers in units of the inter-element spacing `d`.

pub mod coarray;
pub mod coupling;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod optimizer;
pub mod signalsim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
