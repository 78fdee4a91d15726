//! Numerical laboratory for generalized KdV equations
//! `u_t + g'(u)_x + ε² u_xxx = F` with small dispersion.

pub mod dynamics;
pub mod error;
pub mod interaction;
pub mod io;
pub mod nonlinearity;
pub mod numerics;
pub mod pde;
pub mod profile;
pub mod validation;

pub use error::{Error, Result};
pub use nonlinearity::{Nonlinearity, PowerTerm};
pub use profile::{MomentSet, SolitonProfile};
