//! Generalized integral transform pricers: Fourier-Bessel series on the
//! bounded moving domain and the Weber-Orr transform on the semi-infinite one.

mod remainder;
mod series;
mod weber_orr;

pub use remainder::{remainder_bound, upsilon, upsilon_tail_bound, RemainderInputs};
pub use series::{
    fourier_bessel_identity, price_bounded_series, psi_bounded, theta_pade, theta_pade_parts, theta_series, BoundedSeriesPricer,
    PsiCoefficient, SeriesConfig, SeriesPrices,
};
pub use weber_orr::{
    price_semi_infinite_wo, psi_semi_infinite, wo_kernel_eval, WeberOrrConfig, WeberOrrPricer, WoKernel, WoPrices,
};

use crate::error::Result;
use crate::models::{InitialProfile, ProfileShape};
use crate::quadrature::integrate_adaptive;
use crate::specfun::{bessel_j, gamma_fn, jy_any};
use std::f64::consts::PI;

/// Density `Psi = u_z` on the boundary, carried as `phi = sqrt(tau) Psi`.
#[derive(Debug, Clone)]
pub struct GitDensity {
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
    /// Max-norm defect of the discrete Volterra equations.
    pub residual: f64,
    /// True when the solve was skipped for a slowly moving boundary.
    pub skipped: bool,
}

impl GitDensity {
    /// `Psi(tau_i)`; infinite at the origin when the corner data jump.
    pub fn psi(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.phi)
            .map(|(&t, &p)| if t == 0.0 { if p == 0.0 { 0.0 } else { p.signum() * f64::INFINITY } } else { p / t.sqrt() })
            .collect()
    }

    /// Piecewise-linear `phi` at `s`.
    pub(crate) fn phi_at(&self, s: f64) -> f64 {
        let n = self.nodes.len();
        if s <= self.nodes[0] {
            return self.phi[0];
        }
        if s >= self.nodes[n - 1] {
            return self.phi[n - 1];
        }
        let k = (self.nodes.partition_point(|&x| x <= s) - 1).min(n - 2);
        let w = (s - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        self.phi[k] + w * (self.phi[k + 1] - self.phi[k])
    }
}

/// `phi(0)`: limit of `sqrt(tau) u_z` at the boundary when the initial data
/// do not vanish there; `side` is +1 for the domain above the boundary.
pub(crate) fn corner_limit(u0: &InitialProfile, y0: f64, side: f64) -> f64 {
    if u0.is_zero() {
        return 0.0;
    }
    let eps = 1e-12 * y0.max(1.0);
    let v = if side > 0.0 {
        if u0.lo <= y0 && u0.hi > y0 { u0.shape_value((y0 + eps).min(u0.hi)) } else { 0.0 }
    } else if u0.lo < y0 && u0.hi >= y0 {
        u0.shape_value((y0 - eps).max(u0.lo))
    } else {
        0.0
    };
    side * v * (2.0 / PI).sqrt()
}

/// Cylinder function selector for [`moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    J,
    Y,
}

fn cyl(kind: Kind, order: f64, x: f64) -> f64 {
    match jy_any(order, x) {
        Ok((j, y)) => match kind {
            Kind::J => j,
            Kind::Y => y,
        },
        Err(_) => f64::NAN,
    }
}

/// `int_lo^hi s^{nu+1} u0(s) C_a(p s) ds` with `C = J` or `Y` of order `a`.
/// Power terms matching `x^{a+1} C_a` or `x^{1-a} C_a` use the exact
/// antiderivatives; the rest is integrated adaptively.
pub fn moment(u0: &InitialProfile, nu: f64, a: f64, p: f64, kind: Kind) -> f64 {
    if u0.is_zero() {
        return 0.0;
    }
    let (lo, hi) = (u0.lo, u0.hi);
    let mut total = 0.0;
    let mut rest: Vec<(f64, f64)> = Vec::new();
    match &u0.shape {
        ProfileShape::Power(terms) => {
            for &(c, e) in terms {
                let k = nu + 1.0 + e;
                if (k - (a + 1.0)).abs() < 1e-12 {
                    let f = |x: f64| {
                        if x > 0.0 {
                            x.powf(a + 1.0) * cyl(kind, a + 1.0, p * x) / p
                        } else if kind == Kind::J {
                            0.0
                        } else {
                            -gamma_fn(a + 1.0) * 2f64.powf(a + 1.0) / (PI * p.powf(a + 2.0))
                        }
                    };
                    total += c * (f(hi) - f(lo));
                } else if (k - (1.0 - a)).abs() < 1e-12 && lo > 0.0 {
                    let f = |x: f64| -x.powf(1.0 - a) * cyl(kind, a - 1.0, p * x) / p;
                    total += c * (f(hi) - f(lo));
                } else {
                    rest.push((c, e));
                }
            }
            if rest.is_empty() {
                return total;
            }
            let g = |s: f64| {
                let v: f64 = rest.iter().map(|(c, e)| c * s.powf(*e)).sum();
                s.powf(nu + 1.0) * v * cyl(kind, a, p * s)
            };
            total + numeric(g, lo, hi, p)
        }
        ProfileShape::Function { .. } => {
            let g = |s: f64| s.powf(nu + 1.0) * u0.shape_value(s) * cyl(kind, a, p * s);
            numeric(g, lo, hi, p)
        }
    }
}

fn numeric<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, p: f64) -> f64 {
    let pieces = ((hi - lo) * p / PI).ceil().clamp(1.0, 4000.0) as usize;
    let brk: Vec<f64> = (1..pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect();
    integrate_adaptive(g, lo, hi, &brk, 1e-15, 1e-11).0
}

/// `J_a(x)` with the error mapped to NaN.
pub(crate) fn bj(a: f64, x: f64) -> f64 {
    bessel_j(a, x).unwrap_or(f64::NAN)
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(crate::error::Error::NoConvergence { what, msg: format!("non-finite value at index {i}") });
    }
    Ok(())
}
