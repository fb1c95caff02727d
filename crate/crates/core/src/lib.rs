//! Accelerants, potentials and fundamental solutions of canonical Dirac systems
//! on a finite interval.
//!
//! The crate works with `r x r` matrix accelerants `k` on `[-T, T]`, the
//! potentials `v` they generate through the resolvent of the truncated
//! convolution operator, and the `2r x 2r` fundamental solutions of
//! `u' = i j (z I + V) u`. Both directions are covered: accelerant to potential
//! and fundamental solution, and potential back to accelerant through an
//! explicit similarity transform. A family of explicit (pseudo-exponential)
//! solutions is provided for validation.

pub mod accelerant;
pub mod canonical;
pub mod cli;
pub mod direct;
pub mod error;
pub mod inverse;
pub mod io;
pub mod numerics;
pub mod pseudo_exp;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used for every block.
pub type CMat = nalgebra::DMatrix<C64>;

pub use accelerant::{Accelerant, Potential};
pub use numerics::{Grid, MatrixFunction, VolterraOp};
