//! Barrier option pricing through the Bessel-process reduction.
//!
//! Time-dependent CEV and CIR barrier problems are mapped onto the Bessel
//! PDE `u_t = u_zz / 2 + (b / z) u_z` on a moving domain and solved by
//! three routes: a double-layer potential with a Volterra density
//! ([`bp`]), generalized integral transforms ([`git`]) and a finite
//! difference reference ([`fd`]).

pub mod bp;
pub mod error;
pub mod fd;
pub mod git;
pub mod green;
pub mod models;
pub mod quadrature;
pub mod specfun;
pub mod volterra;

pub use error::{Error, Result};
