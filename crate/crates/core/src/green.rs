//! Transition density of the Bessel process with drift `b / z` and the
//! double-layer potential kernel built from it.

use crate::error::{domain, Result};
use crate::models::InitialProfile;
use crate::quadrature::integrate_adaptive;
use crate::specfun::{bessel_i_scaled, gamma_fn, i_scaled_with_slope};
use std::f64::consts::PI;

/// Evaluation mode for the potential kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KernelMode {
    /// Scaled modified Bessel functions at every argument.
    #[default]
    Exact,
    /// Leading large-argument (gaussian) form at every argument.
    Gaussian,
    /// Gaussian form once `z xi / (tau - k)` exceeds the threshold.
    Auto(f64),
}

/// (e^-x I_nu(x), d/dx e^-x I_nu(x)) for any real nu.
fn is_and_slope(nu: f64, x: f64) -> (f64, f64) {
    if nu >= 0.0 {
        return i_scaled_with_slope(nu, x);
    }
    let i = bessel_i_scaled(nu, x).unwrap_or(f64::NAN);
    let i1 = bessel_i_scaled(nu + 1.0, x).unwrap_or(f64::NAN);
    (i, i1 + (nu / x - 1.0) * i)
}

/// `q_tau(z, zeta; b)`: density at `zeta` after time `tau`, started from `z`.
pub fn bessel_density(tau: f64, z: f64, zeta: f64, b: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(domain("bessel_density", format!("tau = {tau} must be positive")));
    }
    if !(zeta >= 0.0) || !(z >= 0.0) {
        return Err(domain("bessel_density", format!("z = {z}, zeta = {zeta} must be >= 0")));
    }
    if z == 0.0 {
        return bessel_density_origin(tau, zeta, b);
    }
    if zeta == 0.0 {
        return Ok(0.0);
    }
    let nu = b - 0.5;
    let x = z * zeta / tau;
    let is = bessel_i_scaled(nu, x)?;
    let log_pre = (0.5 - b) * z.ln() + (b + 0.5) * zeta.ln() - tau.ln() - (z - zeta).powi(2) / (2.0 * tau);
    Ok(log_pre.exp() * is)
}

/// Density from the origin:
/// `2^{1/2-b} zeta^{2b} e^{-zeta^2/(2 tau)} / (tau^{b+1/2} Gamma(b+1/2))`.
pub fn bessel_density_origin(tau: f64, zeta: f64, b: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(domain("bessel_density_origin", format!("tau = {tau} must be positive")));
    }
    if !(b > -0.5) {
        return Err(domain("bessel_density_origin", format!("b = {b} must exceed -1/2")));
    }
    if zeta == 0.0 {
        return Ok(if b == 0.0 { (2.0 / (PI * tau)).sqrt() } else { 0.0 });
    }
    let lg = (0.5 - b) * 2f64.ln() + 2.0 * b * zeta.ln() - zeta * zeta / (2.0 * tau) - (b + 0.5) * tau.ln();
    Ok(lg.exp() / gamma_fn(b + 0.5))
}

/// `sqrt(s) * d/dxi q_s(z, xi; b)`, the kernel with its `s^{-1/2}` factor
/// removed.
pub fn kernel_smooth_factor(s: f64, z: f64, xi: f64, b: f64, mode: KernelMode) -> f64 {
    let x = z * xi / s;
    let gaussian = match mode {
        KernelMode::Exact => false,
        KernelMode::Gaussian => true,
        KernelMode::Auto(th) => x > th,
    };
    let d = xi - z;
    let e = -d * d / (2.0 * s);
    if gaussian {
        let pre = (b * (xi / z).ln() + e).exp() / (2.0 * PI).sqrt();
        return pre * (b / xi - d / s);
    }
    let nu = b - 0.5;
    let (is, slope) = is_and_slope(nu, x);
    let pre = ((0.5 - b) * z.ln() + (b + 0.5) * xi.ln() - 0.5 * s.ln() + e).exp();
    pre * (is * ((b + 0.5) / xi - d / s) + z / s * slope)
}

/// Double-layer kernel `d/dxi q_{tau-k}(z, xi; b)` at `xi = y(k)`.
pub fn potential_kernel(tau: f64, z: f64, k: f64, yk: f64, b: f64, mode: KernelMode) -> Result<f64> {
    let s = tau - k;
    if !(s > 0.0) {
        return Err(domain("potential_kernel", format!("need k < tau, got k = {k}, tau = {tau}")));
    }
    if !(z > 0.0) || !(yk > 0.0) {
        return Err(domain("potential_kernel", format!("z = {z}, y(k) = {yk} must be positive")));
    }
    Ok(kernel_smooth_factor(s, z, yk, b, mode) / s.sqrt())
}

/// Diagonal limit of `sqrt(tau - k) * K(tau, y(tau), k, y(k))` as `k -> tau`.
pub fn kernel_diagonal(y: f64, dy: f64, b: f64) -> f64 {
    (dy + b / y) / (2.0 * PI).sqrt()
}

/// `int u0(zeta) q_tau(z, zeta; b) d zeta`, truncated where the gaussian
/// envelope is negligible.
pub fn heat_convolution(tau: f64, z: f64, u0: &InitialProfile, b: f64) -> f64 {
    heat_convolution_tol(tau, z, u0, b, 1e-11)
}

/// `heat_convolution` with a caller-chosen relative tolerance.
pub fn heat_convolution_tol(tau: f64, z: f64, u0: &InitialProfile, b: f64, rel_tol: f64) -> f64 {
    if u0.is_zero() {
        return 0.0;
    }
    if tau <= 0.0 {
        return u0.value(z);
    }
    let st = tau.sqrt();
    let w = 9.0 * st;
    let lo = u0.lo.max(z - w).max(0.0);
    let hi = u0.hi.min(z + w);
    if !(hi > lo) {
        return 0.0;
    }
    let mut brk = vec![z];
    for k in 1..=4 {
        brk.push(z - k as f64 * st);
        brk.push(z + k as f64 * st);
    }
    let f = |zeta: f64| {
        let q = bessel_density(tau, z, zeta, b).unwrap_or(0.0);
        u0.shape_value(zeta) * q
    };
    integrate_adaptive(f, lo, hi, &brk, 1e-3 * rel_tol, rel_tol).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_is_reflected_gaussian() {
        // b = 1, nu = 1/2: q = (zeta/z) (g(z - zeta) - g(z + zeta))
        let (tau, z, zeta) = (0.7, 1.2, 0.9);
        let g = |d: f64| (-d * d / (2.0 * tau)).exp() / (2.0 * PI * tau).sqrt();
        let e = zeta / z * (g(z - zeta) - g(z + zeta));
        let v = bessel_density(tau, z, zeta, 1.0).unwrap();
        assert!((v - e).abs() < 1e-14, "{v} {e}");
    }

    #[test]
    fn origin_is_the_limit() {
        let v0 = bessel_density_origin(0.6, 0.8, 1.7).unwrap();
        let v = bessel_density(0.6, 1e-7, 0.8, 1.7).unwrap();
        assert!((v / v0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_xi_derivative() {
        let (tau, z, k, b) = (1.0, 1.3, 0.4, 1.5);
        let xi = 1.1;
        let h = 1e-6;
        let fd = (bessel_density(tau - k, z, xi + h, b).unwrap() - bessel_density(tau - k, z, xi - h, b).unwrap())
            / (2.0 * h);
        let kv = potential_kernel(tau, z, k, xi, b, KernelMode::Exact).unwrap();
        assert!((kv - fd).abs() < 1e-8, "{kv} {fd}");
    }

    #[test]
    fn gaussian_mode_close_at_large_argument() {
        let b = 1.25;
        let (z, xi) = (2.0, 1.98);
        let s = z * xi / 200.0;
        let ex = kernel_smooth_factor(s, z, xi, b, KernelMode::Exact);
        let ga = kernel_smooth_factor(s, z, xi, b, KernelMode::Gaussian);
        assert!(((ex - ga) / ex).abs() < 1e-3, "{ex} {ga}");
    }

    #[test]
    fn diagonal_limit() {
        let (y, b) = (2.0, 3.0);
        let dy = 0.3;
        let s = 1e-9;
        let v = kernel_smooth_factor(s, y + dy * s, y, b, KernelMode::Exact);
        assert!((v - kernel_diagonal(y, dy, b)).abs() < 1e-6, "{v}");
    }
}
