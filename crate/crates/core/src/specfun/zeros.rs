use super::bessel_jy::jy_nonneg;
use crate::error::{domain, Error, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

/// McMahon's large-n estimate of the n-th positive zero of J_nu.
pub fn mcmahon_zero(nu: f64, n: usize) -> f64 {
    let beta = (n as f64 + 0.5 * nu - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    let b8 = 8.0 * beta;
    beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
}

fn refine(nu: f64, mut lo: f64, mut hi: f64, guess: f64) -> Result<f64> {
    let j = |x: f64| jy_nonneg(nu, x).map(|v| (v.0, v.2));
    let (mut flo, _) = j(lo)?;
    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (f, df) = j(x)?;
        if f == 0.0 {
            return Ok(x);
        }
        if (f < 0.0) == (flo < 0.0) {
            lo = x;
            flo = f;
        } else {
            hi = x;
        }
        let step = f / df;
        let mut nx = x - step;
        if !(nx > lo && nx < hi) || df == 0.0 {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() <= 4.0 * f64::EPSILON * x {
            let (fx, _) = j(nx)?;
            let _ = fx;
            return Ok(nx);
        }
        x = nx;
        if hi - lo <= 2.0 * f64::EPSILON * x {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { what: "jnu_zeros", msg: format!("order {nu}") })
}

fn compute_zeros(nu: f64, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let step = 0.9;
    let mut a = nu.max(0.0) + 1e-3;
    let (mut fa, _, _, _) = jy_nonneg(nu, a)?;
    while out.len() < n {
        let k = out.len() + 1;
        let mc = mcmahon_zero(nu, k);
        // jump ahead when the asymptotic estimate is trustworthy
        if k > 3 && mc - 1.2 > a {
            let prev = *out.last().unwrap();
            if mc - 1.2 > prev {
                a = mc - 1.2;
                fa = jy_nonneg(nu, a)?.0;
            }
        }
        let b = a + step;
        let (fb, _, _, _) = jy_nonneg(nu, b)?;
        if (fa < 0.0) != (fb < 0.0) {
            out.push(refine(nu, a, b, mc)?);
        }
        a = b;
        fa = fb;
    }
    Ok(out)
}

type ZeroCache = RwLock<HashMap<u64, Arc<Vec<f64>>>>;

/// First `n` positive zeros of J_nu (nu >= 0), memoized per order.
pub fn jnu_zeros(nu: f64, n: usize) -> Result<Arc<Vec<f64>>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain("jnu_zeros", format!("order {nu} must be >= 0")));
    }
    static CACHE: OnceLock<ZeroCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let key = nu.to_bits();
    if let Some(v) = cache.read().unwrap().get(&key) {
        if v.len() >= n {
            if v.len() == n {
                return Ok(v.clone());
            }
            return Ok(Arc::new(v[..n].to_vec()));
        }
    }
    let zs = Arc::new(compute_zeros(nu, n)?);
    cache.write().unwrap().insert(key, zs.clone());
    Ok(zs)
}
