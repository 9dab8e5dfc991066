//! Half-line inverse scattering for the Morse well: exact spectral data,
//! the Marchenko kernel from oscillatory Fourier transforms of the phase
//! shift, and potential recovery by Nyström solution of the Marchenko
//! equation.

// `!(x > 0.0)` is used on purpose so that NaN fails every check, and index
// loops read better than iterator chains in the triangular solves.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod interp;
pub mod inversion;
pub mod kernel;
pub mod linalg;
pub mod morse;
pub mod quadrature;
pub mod registry;
pub mod specfun;

pub use error::{Error, Result};
pub use morse::MorseModel;
