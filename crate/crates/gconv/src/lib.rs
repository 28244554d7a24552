// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod optim;
pub mod par;
pub mod phase_space;
pub mod protocol;
pub mod quadrature;
pub mod sweep;
pub mod teleport;
pub mod wavefunction;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Fock cutoff used when none is given.
pub const DEFAULT_CUTOFF: usize = 60;
