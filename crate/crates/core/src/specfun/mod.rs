//! Special functions: Bessel J, Y, scaled I and K of real order, zeros of
//! J, Gamma and the complex complementary error function.

mod bessel_ik;
mod bessel_jy;
mod erfc;
mod gamma;
mod zeros;

pub use bessel_ik::{bessel_i_scaled, bessel_i_unscaled, bessel_k_scaled, bessel_k_unscaled};
pub use bessel_jy::{bessel_j, bessel_jy, bessel_y};
pub use erfc::{erfc_complex, erfcx_complex, faddeeva};
pub use gamma::{gamma_fn, ln_gamma};
pub use zeros::{jnu_zeros, mcmahon_zero};

pub(crate) use bessel_ik::{i_scaled_with_slope, ik_scaled};
pub(crate) use bessel_jy::jy_any;

use crate::error::{domain, Result};

/// Real Bessel order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(domain("BesselOrder", format!("order {nu} is not finite")));
        }
        Ok(BesselOrder(nu))
    }

    /// Order attached to the Bessel PDE with drift coefficient `b`.
    pub fn from_drift(b: f64) -> Result<Self> {
        Self::new(b - 0.5)
    }

    pub(crate) const fn raw(v: f64) -> Self {
        BesselOrder(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.abs()
    }
}
