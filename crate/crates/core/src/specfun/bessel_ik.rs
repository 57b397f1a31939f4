use super::bessel_jy::hankel_threshold;
use super::gamma::temme_gammas;
use crate::error::{domain, Result};
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;
const XMIN: f64 = 2.0;

/// Large-argument expansions: (e^-x I_nu, e^x K_nu) plus the x-derivative of
/// e^-x I_nu.
fn ik_asymptotic(nu: f64, x: f64) -> (f64, f64, f64) {
    let mu4 = 4.0 * nu * nu;
    let mut si = 1.0;
    let mut sk = 1.0;
    let mut sd = -0.5;
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
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        si += sign * term;
        sk += term;
        sd += sign * term * (-kf - 0.5);
        if a < 1e-17 {
            break;
        }
    }
    let pre = (2.0 * PI * x).sqrt();
    (si / pre, sk * (PI / (2.0 * x)).sqrt(), sd / (pre * x))
}

/// Scaled (e^-x I, e^x K, e^-x I', e^x K') for nu >= 0, x > 0.
fn ik_scaled_nonneg(xnu: f64, x: f64) -> (f64, f64, f64, f64) {
    if x >= hankel_threshold(xnu + 1.0) {
        let (i0, k0, _) = ik_asymptotic(xnu, x);
        let (i1, k1, _) = ik_asymptotic(xnu + 1.0, x);
        // I' = I_{nu+1} + nu/x I, K' = -K_{nu+1} + nu/x K
        return (i0, k0, i1 + xnu / x * i0, -k1 + xnu / x * k0);
    }
    let nl = (xnu + 0.5) as usize;
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mut h = xnu * xi;
    if h < FPMIN {
        h = FPMIN;
    }
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    let mut ril = 1e-200;
    let mut ripl = h * ril;
    let ril1 = ril;
    let rip1 = ripl;
    let mut fact = xnu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
    }
    let f = ripl / ril;
    let (mut rkmu, mut rk1);
    if x < XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let e = e.exp();
        let mut p = 0.5 * e / gampl;
        let mut q = 0.5 / (e * gammi);
        let mut c = 1.0;
        let d = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let ex = x.exp();
        rkmu = sum * ex;
        rk1 = sum1 * xi2 * ex;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..MAXIT {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        rkmu = (PI / (2.0 * x)).sqrt() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
    }
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    let ri = rimu * ril1 / ril;
    let rip = rimu * rip1 / ril;
    for i in 1..=nl {
        let rktemp = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = rktemp;
    }
    let rk = rkmu;
    let rkp = xnu * xi * rkmu - rk1;
    (ri, rk, rip, rkp)
}

fn check_x(func: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(func, format!("argument {x} must be finite and >= 0")));
    }
    Ok(())
}

/// e^-x I_nu(x) for real nu and x >= 0.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    check_x("bessel_i_scaled", x)?;
    if !nu.is_finite() {
        return Err(domain("bessel_i_scaled", "order must be finite"));
    }
    if x == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 || nu == nu.floor() {
            Ok(0.0)
        } else {
            Ok(f64::INFINITY)
        };
    }
    if nu >= 0.0 {
        return Ok(ik_scaled_nonneg(nu, x).0);
    }
    let a = -nu;
    let (i, k, _, _) = ik_scaled_nonneg(a, x);
    if a == a.floor() {
        return Ok(i);
    }
    Ok(i + 2.0 / PI * (a * PI).sin() * k * (-2.0 * x).exp())
}

/// e^x K_nu(x) for real nu and x > 0.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    check_x("bessel_k_scaled", x)?;
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    if !nu.is_finite() {
        return Err(domain("bessel_k_scaled", "order must be finite"));
    }
    Ok(ik_scaled_nonneg(nu.abs(), x).1)
}

/// Unscaled I_nu(x); overflows for large x.
pub fn bessel_i_unscaled(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_i_scaled(nu, x)? * x.exp())
}

/// Unscaled K_nu(x); underflows for large x.
pub fn bessel_k_unscaled(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

/// (e^-x I_nu(x), d/dx[e^-x I_nu(x)]) for nu >= 0, x > 0, free of
/// cancellation at large x.
pub(crate) fn i_scaled_with_slope(nu: f64, x: f64) -> (f64, f64) {
    if x >= hankel_threshold(nu + 1.0) {
        let (i, _, d) = ik_asymptotic(nu, x);
        return (i, d);
    }
    let (i, _, ip, _) = ik_scaled_nonneg(nu, x);
    (i, ip - i)
}

/// Scaled I and K together with their scaled derivatives (nu >= 0).
pub(crate) fn ik_scaled(nu: f64, x: f64) -> (f64, f64, f64, f64) {
    ik_scaled_nonneg(nu, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i_series(nu: f64, x: f64) -> f64 {
        let mut term = (0.5 * x).powf(nu) / crate::specfun::gamma_fn(nu + 1.0);
        let mut s = term;
        let q = 0.25 * x * x;
        for k in 1..400 {
            let kf = k as f64;
            term *= q / (kf * (kf + nu));
            s += term;
            if term.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        s
    }

    #[test]
    fn matches_series() {
        for &nu in &[0.0, 0.25, 0.5, 1.0, 2.5, 3.7] {
            for &x in &[0.01, 0.5, 1.5, 2.5, 8.0, 20.0] {
                let v = bessel_i_scaled(nu, x).unwrap();
                let s = i_series(nu, x) * (-x).exp();
                assert!((v / s - 1.0).abs() < 1e-13, "nu={nu} x={x} {v} {s}");
            }
        }
    }

    #[test]
    fn slope_matches_difference_quotient() {
        for &x in &[0.7, 5.0, 60.0, 1e4] {
            let (_, d) = i_scaled_with_slope(2.5, x);
            let h = 1e-5 * x;
            let fd = (bessel_i_scaled(2.5, x + h).unwrap() - bessel_i_scaled(2.5, x - h).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7 * d.abs(), "x={x} {d} {fd}");
        }
    }

    #[test]
    fn negative_order_reflection() {
        // I_{-1/2}(x) = sqrt(2/(pi x)) cosh x
        for &x in &[0.3, 2.0, 9.0, 40.0] {
            let v = bessel_i_scaled(-0.5, x).unwrap();
            let e = (2.0 / (PI * x)).sqrt() * 0.5 * (1.0 + (-2.0 * x).exp());
            assert!((v - e).abs() < 1e-14 * e, "x={x}");
        }
    }
}
