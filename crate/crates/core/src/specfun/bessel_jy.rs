use super::gamma::temme_gammas;
use crate::error::{domain, Result};
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;
const XMIN: f64 = 2.0;

/// Argument above which the Hankel expansion is used.
pub(crate) fn hankel_threshold(nu: f64) -> f64 {
    25.0 + 0.5 * nu * nu
}

/// Hankel asymptotic (J, Y) for large x.
pub(crate) fn jy_hankel(nu: f64, x: f64) -> (f64, f64) {
    let mu4 = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let t = (2.0 * kf - 1.0) * (2.0 * kf - 1.0);
        term *= (mu4 - t) / (8.0 * kf * x);
        let a = term.abs();
        if a > last {
            break;
        }
        last = a;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if a < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let f = (2.0 / (PI * x)).sqrt();
    (f * (p * c - q * s), f * (p * s + q * c))
}

/// J, Y and their derivatives for nu >= 0, x > 0.
pub(crate) fn jy_nonneg(nu: f64, x: f64) -> Result<(f64, f64, f64, f64)> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain("bessel_jy", format!("order {nu} must be finite and >= 0")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("bessel_jy", format!("argument {x} must be finite and > 0")));
    }
    if x >= hankel_threshold(nu + 1.0) {
        let (j, y) = jy_hankel(nu, x);
        let (j1, y1) = jy_hankel(nu + 1.0, x);
        return Ok((j, y, nu / x * j - j1, nu / x * y - y1));
    }
    Ok(steed(nu, x))
}

fn steed(xnu: f64, x: f64) -> (f64, f64, f64, f64) {
    let nl: usize = if x < XMIN {
        (xnu + 0.5) as usize
    } else {
        let v = xnu - x + 1.5;
        if v > 0.0 {
            v as usize
        } else {
            0
        }
    };
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;
    let mut isign = 1.0;
    let mut h = xnu * xi;
    if h < FPMIN {
        h = FPMIN;
    }
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    let mut rjl = isign * 1e-200;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = xnu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;
    let (rjmu, mut rymu, ry1_init);
    if x < XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                break;
            }
        }
        rymu = -sum;
        let ry1 = -sum1 * xi2;
        let rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
        ry1_init = ry1;
    } else {
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let mut temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        for i in 1..MAXIT {
            a += 2.0 * i as f64;
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (dlr - 1.0).abs() + dli.abs() <= EPS {
                break;
            }
        }
        let gam = (p - f) / q;
        let mut v = (w / ((p - f) * gam + q)).sqrt();
        if rjl < 0.0 {
            v = -v;
        }
        rjmu = v;
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1_init = xmu * xi * rymu - rymup;
    }
    let fact = rjmu / rjl;
    let rj = rjl1 * fact;
    let rjp = rjp1 * fact;
    let mut ry1 = ry1_init;
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    let ry = rymu;
    let ryp = xnu * xi * rymu - ry1;
    (rj, ry, rjp, ryp)
}

/// J and Y of arbitrary real order, using the reflection formulas for
/// negative orders.
pub(crate) fn jy_any(nu: f64, x: f64) -> Result<(f64, f64)> {
    if nu >= 0.0 {
        let (j, y, _, _) = jy_nonneg(nu, x)?;
        return Ok((j, y));
    }
    let a = -nu;
    let (j, y, _, _) = jy_nonneg(a, x)?;
    if a == a.floor() {
        let s = if (a as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return Ok((s * j, s * y));
    }
    let (s, c) = (a * PI).sin_cos();
    Ok((c * j - s * y, s * j + c * y))
}

/// Bessel function of the first kind J_nu(x), nu >= 0, x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 && nu >= 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(jy_nonneg(nu, x)?.0)
}

/// Bessel function of the second kind Y_nu(x), nu >= 0, x > 0.
pub fn bessel_y(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 && nu >= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(jy_nonneg(nu, x)?.1)
}

/// (J_nu, Y_nu, J'_nu, Y'_nu) at x > 0 for nu >= 0.
pub fn bessel_jy(nu: f64, x: f64) -> Result<(f64, f64, f64, f64)> {
    jy_nonneg(nu, x)
}
