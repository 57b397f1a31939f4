//! Truncation bounds for the Weber-Orr integral cut at `p = P`.

use crate::specfun::{erfc_complex, erfcx_complex};
use num_complex::Complex64;
use std::f64::consts::PI;

fn erfc(x: f64) -> f64 {
    erfc_complex(Complex64::new(x, 0.0)).re
}

/// `erfc((P t + i eta)/sqrt(2 t)) exp(-eta^2/(2t)) + conj`, written with
/// the scaled function so large `P` does not overflow.
pub fn upsilon(p: f64, t: f64, eta: f64) -> f64 {
    upsilon_parts(p, t, eta).re
}

pub(crate) fn upsilon_parts(p: f64, t: f64, eta: f64) -> Complex64 {
    let s = (2.0 * t).sqrt();
    let damp = (-0.5 * p * p * t).exp();
    let a = erfcx_complex(Complex64::new(p * t, eta) / s) * Complex64::from_polar(1.0, -p * eta);
    let b = erfcx_complex(Complex64::new(p * t, -eta) / s) * Complex64::from_polar(1.0, p * eta);
    (a + b) * damp
}

/// `2 erfc(P sqrt(t/2))`, a bound on `|upsilon(P, t, eta)|` for all `eta`.
pub fn upsilon_tail_bound(p: f64, t: f64) -> f64 {
    2.0 * erfc(p * (0.5 * t).sqrt())
}

/// Data entering the truncation bound at a single evaluation point.
#[derive(Debug, Clone)]
pub struct RemainderInputs {
    /// `int q^{nu+1/2} |u0(q)| dq`.
    pub m1: f64,
    /// `(s, y(s), |Psi(s)|)` at panel midpoints with panel widths.
    pub density: Vec<(f64, f64, f64, f64)>,
}

/// Bound on the part of the price integral beyond `p = P`, using the
/// large-argument form of the kernel.
pub fn remainder_bound(p: f64, tau: f64, z: f64, nu: f64, inputs: &RemainderInputs) -> f64 {
    let pre = z.powf(-nu - 0.5);
    let cut = |t: f64| upsilon_tail_bound(p, t) / (2.0 * PI * t).sqrt();
    let free = cut(tau) * inputs.m1;
    let src: f64 = inputs
        .density
        .iter()
        .filter(|r| r.0 < tau)
        .map(|&(s, y, psi, h)| 0.5 * h * y.powf(nu + 0.5) * psi * cut(tau - s))
        .sum();
    pre * (free + src)
}
