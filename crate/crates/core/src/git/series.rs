//! Fourier-Bessel series on `0 < z < y(tau)`.

use super::{bj, check_finite, corner_limit, moment, GitDensity, Kind};
use crate::error::{invalid, Result};
use crate::models::{BesselProblem, Domain, InitialProfile};
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::specfun::{ik_scaled, jnu_zeros};
use crate::volterra::{multi_rhs_solve, residual, uniform_grid, KernelMatrix, Singularity, VolterraProblem};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Exponent beyond which `exp(-x)` terms are dropped.
const CUTOFF: f64 = 40.0;
/// Largest number of eigenvalues used by any sum.
const MAX_TERMS: usize = 20000;

/// Coefficient multiplying each eigen-term in the boundary-derivative sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiCoefficient {
    /// `mu_n`, from differentiating the series at the boundary.
    #[default]
    Mu,
    /// `mu_n + nu`.
    MuPlusNu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Terms kept in the price series.
    pub n: usize,
    /// Use the Pade form of Theta for the initial-data term when `theta` is small.
    pub pade: bool,
    pub theta_threshold: f64,
    /// Time intervals of the density grid.
    pub m: usize,
    pub coefficient: PsiCoefficient,
    /// Time nodes `tau_max (i/M)^2` instead of uniform.
    pub graded: bool,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { n: 100, pade: false, theta_threshold: 0.1, m: 20, coefficient: PsiCoefficient::Mu, graded: false }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("series needs N >= 1"));
        }
        if self.m < 4 {
            return Err(invalid(format!("series density grid needs M >= 4, got {}", self.m)));
        }
        if !(self.theta_threshold > 0.0) {
            return Err(invalid("theta threshold must be positive"));
        }
        Ok(())
    }
}

/// `sum_{n<=N} exp(-mu_n^2 theta^2 / 2) (x1 x2)^nu J(mu_n x1) J(mu_n x2) / J_{+1}(mu_n)^2`
/// with Bessel order `|nu|`.
pub fn theta_series(theta: f64, x1: f64, x2: f64, nu: f64, n: usize) -> Result<f64> {
    if !(theta > 0.0) || !x1.is_finite() || !x2.is_finite() {
        return Err(invalid(format!("theta_series needs theta > 0 (got {theta})")));
    }
    let a = nu.abs();
    let zeros = jnu_zeros(a, n)?;
    let mut s = 0.0;
    for &mu in zeros.iter() {
        let e = 0.5 * mu * mu * theta * theta;
        if e > 700.0 {
            break;
        }
        let d = bj(a + 1.0, mu);
        s += (-e).exp() * bj(a, mu * x1) * bj(a, mu * x2) / (d * d);
    }
    Ok((x1 * x2).powf(nu) * s)
}

/// Fourier-Bessel resolvent `H(g) = I(g a) [K(g c) I(g) - K(g) I(g c)] / I(g)`
/// for `a = min(x1, x2)`, `c = max(x1, x2)`, with its `g`-derivative.
fn resolvent(order: f64, g: f64, x1: f64, x2: f64) -> (f64, f64) {
    let (a, c) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let (ia, _, ipa, _) = ik_scaled(order, g * a);
    let (ic, kc, ipc, kpc) = ik_scaled(order, g * c);
    let (i1, k1, ip1, kp1) = ik_scaled(order, g);
    let e1 = (g * (a - c)).exp();
    let t1 = e1 * ia * kc;
    let dt1 = e1 * (a * ipa * kc + c * ia * kpc);
    let e2 = (g * (a + c - 2.0)).exp();
    let t2 = e2 * ia * ic * k1 / i1;
    let dt2 = t2 * (a * ipa / ia + c * ipc / ic + kp1 / k1 - ip1 / i1);
    (t1 - t2, dt1 - dt2)
}

/// Pade approximation of `Theta` assembled from the resolvent at `2/theta`
/// and its derivative at `2 sqrt(2)/theta`.
pub fn theta_pade(theta: f64, x1: f64, x2: f64, nu: f64) -> Result<f64> {
    let (a1, a2) = theta_pade_parts(theta, x1, x2, nu)?;
    Ok(a1 + a2)
}

/// The two terms of [`theta_pade`], each including `(x1 x2)^nu`.
pub fn theta_pade_parts(theta: f64, x1: f64, x2: f64, nu: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(invalid(format!("theta_pade needs theta > 0 (got {theta})")));
    }
    if !(x1 > 0.0 && x1 <= 1.0 && x2 > 0.0 && x2 <= 1.0) {
        return Err(invalid("theta_pade needs x1, x2 in (0, 1]"));
    }
    let a = nu.abs();
    let g1 = 2.0 / theta;
    let (h1, _) = resolvent(a, g1, x1, x2);
    let a1 = 2.0 / (theta * theta) * h1;
    let g2 = 2.0 * 2f64.sqrt() / theta;
    let (h2, dh2) = resolvent(a, g2, x1, x2);
    let a2 = -0.25 * g2 * (2.0 * g2 * h2 + g2 * g2 * dh2);
    let pre = (x1 * x2).powf(nu);
    Ok((pre * a1, pre * a2))
}

/// Partial sum of `sum mu_n J(mu_n x) / ((mu_n^2 - k^2) J_{+1}(mu_n))` and
/// the closed form `J(k x) / (2 J(k))`.  The `1/mu_n` part of each term is
/// summed exactly through `x^nu = sum 2 J(mu_n x) / (mu_n J_{+1}(mu_n))`.
pub fn fourier_bessel_identity(x: f64, k: f64, nu: f64, terms: usize) -> Result<(f64, f64)> {
    if terms < 1 {
        return Err(invalid("identity check needs at least one term"));
    }
    let a = nu.abs();
    let zeros = jnu_zeros(a, terms)?;
    let mut s = 0.5 * x.powf(a);
    for &mu in zeros.iter() {
        s += k * k * bj(a, mu * x) / (mu * (mu * mu - k * k) * bj(a + 1.0, mu));
    }
    Ok((s, bj(a, k * x) / (2.0 * bj(a, k))))
}

/// Eigenvalues with `J_{|nu|+1}` at each.
struct Spectrum {
    mu: Arc<Vec<f64>>,
    jp: Vec<f64>,
}

impl Spectrum {
    fn new(a: f64, n: usize) -> Result<Self> {
        let mu = jnu_zeros(a, n)?;
        let jp = mu.par_iter().map(|&m| bj(a + 1.0, m)).collect();
        Ok(Spectrum { mu, jp })
    }

    /// Number of terms with `mu^2 t / (2 y^2) <= CUTOFF`, at most `cap`.
    fn active(&self, t: f64, y: f64, cap: usize) -> usize {
        let lim = y * (2.0 * CUTOFF / t).sqrt();
        self.mu.partition_point(|&m| m <= lim).min(cap)
    }
}

/// Values at evaluation points.
#[derive(Debug, Clone)]
pub struct SeriesPrices {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub price: Vec<f64>,
    /// Size of the next N terms of the price series.
    pub remainder: Vec<f64>,
    pub density: GitDensity,
}

/// Bounded-domain pricer sharing eigenvalues and the Volterra kernel
/// across initial profiles.
pub struct BoundedSeriesPricer {
    problem: BesselProblem,
    cfg: SeriesConfig,
    nu: f64,
    a: f64,
    nodes: Vec<f64>,
    ys: Vec<f64>,
    spec: Spectrum,
    matrix: KernelMatrix,
}

impl BoundedSeriesPricer {
    pub fn new(problem: &BesselProblem, cfg: SeriesConfig) -> Result<Self> {
        cfg.validate()?;
        if problem.domain != Domain::Bounded {
            return Err(invalid(format!("series pricer needs a bounded problem, got {:?}", problem.domain)));
        }
        let nu = problem.nu();
        let a = nu.abs();
        let mut nodes = uniform_grid(problem.tau_max, cfg.m)?;
        if cfg.graded {
            let tm = problem.tau_max;
            nodes = nodes.iter().map(|&t| tm * (t / tm) * (t / tm)).collect();
        }
        let ys: Vec<f64> = nodes.iter().map(|&t| problem.y.value(t)).collect();
        let dys: Vec<f64> = nodes.iter().map(|&t| problem.y.derivative(t)).collect();
        let dt = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let ymax = ys.iter().cloned().fold(0.0, f64::max);
        let need = (ymax * (2.0 * CUTOFF / dt).sqrt() / PI).ceil() as usize + 2;
        let spec = Spectrum::new(a, need.max(cfg.n * 2).clamp(cfg.n, MAX_TERMS))?;
        let coef = cfg.coefficient;
        let kernel = |i: usize, j: usize| -> f64 {
            let ti = nodes[i];
            if i == j {
                return ti.sqrt() * dys[i] / (2.0 * PI).sqrt();
            }
            let t = ti - nodes[j];
            let (yi, yj) = (ys[i], ys[j]);
            let nact = spec.active(t, yi, MAX_TERMS);
            let mut s = 0.0;
            for n in 0..nact {
                let mu = spec.mu[n];
                let c = match coef {
                    PsiCoefficient::Mu => mu,
                    PsiCoefficient::MuPlusNu => mu + nu,
                };
                s += c * bj(a, mu * yj / yi) * (-(mu * mu * t) / (2.0 * yi * yi)).exp() / spec.jp[n];
            }
            let k = -(yj / yi).powf(nu + 1.0) / (yi * yi) * s;
            // equation is phi - int S phi / sqrt((t-s)s) = g
            -(ti.sqrt() * t.sqrt() * k)
        };
        let matrix = KernelMatrix::assemble(&nodes, Singularity::SqrtBothEnds, kernel)?;
        Ok(BoundedSeriesPricer { problem: problem.clone(), cfg, nu, a, nodes, ys, spec, matrix })
    }

    fn coefficient(&self, mu: f64) -> f64 {
        match self.cfg.coefficient {
            PsiCoefficient::Mu => mu,
            PsiCoefficient::MuPlusNu => mu + self.nu,
        }
    }

    fn rhs(&self, u0: &InitialProfile) -> Vec<f64> {
        let (nu, a) = (self.nu, self.a);
        let y0 = self.ys[0];
        self.nodes
            .par_iter()
            .zip(self.ys.par_iter())
            .map(|(&t, &y)| {
                if t == 0.0 {
                    return corner_limit(u0, y0, -1.0);
                }
                let nact = self.spec.active(t, y, MAX_TERMS);
                let mut s = 0.0;
                for n in 0..nact {
                    let mu = self.spec.mu[n];
                    let an = moment(u0, nu, a, mu / y, Kind::J);
                    s += self.coefficient(mu) * (-(mu * mu * t) / (2.0 * y * y)).exp() * an / self.spec.jp[n];
                }
                t.sqrt() * (-2.0 * y.powf(-nu - 3.0) * s)
            })
            .collect()
    }

    /// Boundary density for `u0`.
    pub fn density(&self, u0: &InitialProfile) -> Result<GitDensity> {
        let g = self.rhs(u0);
        check_finite(&g, "bounded series boundary data")?;
        let vp = VolterraProblem::new(self.matrix.clone(), 1.0, g)?;
        let phi = multi_rhs_solve(&vp, std::slice::from_ref(&vp.rhs))?.remove(0);
        let res = residual(&vp, &phi);
        Ok(GitDensity { nodes: self.nodes.clone(), phi, residual: res, skipped: false })
    }

    /// Quadrature in `s` for the density term: nodes, weights including
    /// `y(s)^{nu+1} Psi(s) / 2`, and `y(s)`.
    fn s_rule(&self, dens: &GitDensity) -> Vec<(f64, f64, f64)> {
        let nu = self.nu;
        let n = self.nodes.len();
        let tmax = self.nodes[n - 1];
        let g16 = GaussLegendre::cached(16);
        let g8 = GaussLegendre::cached(8);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        let mut out = Vec::new();
        let mut push = |s: f64, w_s: f64| {
            let y = self.problem.y.value(s);
            out.push((s, 0.5 * w_s * y.powf(nu + 1.0) * dens.phi_at(s), y));
        };
        // first panel with s = sigma^2, so ds / sqrt(s) = 2 d sigma
        g16.push_mapped(0.0, self.nodes[1].sqrt(), &mut xs, &mut ws);
        for (&x, &w) in xs.iter().zip(&ws) {
            push(x * x, 2.0 * w);
        }
        for j in 1..n - 2 {
            xs.clear();
            ws.clear();
            g16.push_mapped(self.nodes[j], self.nodes[j + 1], &mut xs, &mut ws);
            for (&x, &w) in xs.iter().zip(&ws) {
                push(x, w / x.sqrt());
            }
        }
        // last panel graded towards tau_max
        let l = self.nodes[n - 2];
        let h = tmax - l;
        for k in 0..48 {
            let a = tmax - h * 0.5f64.powi(k);
            let b = tmax - h * 0.5f64.powi(k + 1);
            xs.clear();
            ws.clear();
            g8.push_mapped(a, b, &mut xs, &mut ws);
            for (&x, &w) in xs.iter().zip(&ws) {
                push(x, w / x.sqrt());
            }
        }
        out
    }

    fn pade_term(&self, u0: &InitialProfile, z: f64, theta: f64, y: f64) -> f64 {
        let nu = self.nu;
        if u0.is_zero() {
            return 0.0;
        }
        let f = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            s * u0.shape_value(s) * theta_pade(theta, (s / y).min(1.0), z / y, nu).unwrap_or(0.0)
        };
        let hi = u0.hi.min(y);
        let v = integrate_adaptive(f, u0.lo, hi, &[z], 1e-14, 1e-9).0;
        2.0 * z.powf(-2.0 * nu) * y.powf(2.0 * nu - 2.0) * v
    }

    /// `u(tau_max, z)` and the size of the next block of terms.
    fn value(&self, u0: &InitialProfile, rule: &[(f64, f64, f64)], z: f64) -> (f64, f64) {
        let (nu, a) = (self.nu, self.a);
        let n = self.nodes.len();
        let t = self.nodes[n - 1];
        let y = self.ys[n - 1];
        if z >= y * (1.0 - 1e-14) {
            return (0.0, 0.0);
        }
        let theta = t.sqrt() / y;
        let use_pade = self.cfg.pade && theta < self.cfg.theta_threshold;
        let moving = rule.iter().any(|r| r.2 != y);
        let nsum = self.cfg.n.min(self.spec.mu.len());
        let ntail = (2 * self.cfg.n).min(self.spec.mu.len());
        let term = |k: usize| -> f64 {
            let mu = self.spec.mu[k];
            let lam = mu * mu / (2.0 * y * y);
            let free = if use_pade || lam * t > CUTOFF { 0.0 } else { (-lam * t).exp() * moment(u0, nu, a, mu / y, Kind::J) };
            let mut src = 0.0;
            if moving {
                for &(s, w, ys) in rule {
                    let x = lam * (t - s);
                    if x < CUTOFF {
                        src += w * (-x).exp() * bj(a, mu * ys / y);
                    }
                }
            }
            let jp = self.spec.jp[k];
            2.0 * z.powf(-nu) / (y * y) * bj(a, mu * z / y) / (jp * jp) * (free + src)
        };
        let mut v: f64 = (0..nsum).map(term).sum();
        let rem: f64 = (nsum..ntail).map(|k| term(k).abs()).sum();
        if use_pade {
            v += self.pade_term(u0, z, theta, y);
        }
        (v, rem)
    }

    /// Solve and evaluate at `zs`.
    pub fn price_points(&self, u0: &InitialProfile, zs: &[f64]) -> Result<SeriesPrices> {
        let t = self.problem.tau_max;
        for &z in zs {
            if !(z > 0.0) || !self.problem.contains(t, z) {
                return Err(invalid(format!("evaluation point z = {z} lies outside (0, y(tau_max)]")));
            }
        }
        let density = self.density(u0)?;
        let rule = self.s_rule(&density);
        let vals: Vec<(f64, f64)> = zs.par_iter().map(|&z| self.value(u0, &rule, z)).collect();
        let mut u = Vec::new();
        let mut price = Vec::new();
        let mut remainder = Vec::new();
        for (&z, &(w, r)) in zs.iter().zip(&vals) {
            u.push(w);
            remainder.push(r);
            price.push(self.problem.back.price((self.problem.back.from_z)(z), w));
        }
        Ok(SeriesPrices { z: zs.to_vec(), u, price, remainder, density })
    }
}

/// Boundary density of the bounded problem on a grid of `m` intervals.
pub fn psi_bounded(problem: &BesselProblem, cfg: SeriesConfig) -> Result<GitDensity> {
    BoundedSeriesPricer::new(problem, cfg)?.density(&problem.u0)
}

/// Series price on the bounded domain at `zs`.
pub fn price_bounded_series(problem: &BesselProblem, cfg: SeriesConfig, zs: &[f64]) -> Result<SeriesPrices> {
    BoundedSeriesPricer::new(problem, cfg)?.price_points(&problem.u0, zs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_zero_for_any_n() {
        for n in [1, 5, 40] {
            let v = theta_series(0.3, 1.0, 0.4, 1.3, n).unwrap();
            assert!(v.abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn large_theta_single_term() {
        let full = theta_series(5.0, 0.3, 0.7, 0.8, 50).unwrap();
        let one = theta_series(5.0, 0.3, 0.7, 0.8, 1).unwrap();
        assert!((full / one - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resolvent_derivative_matches_difference() {
        let (g, h) = (7.3, 1e-5);
        let (_, d) = resolvent(1.4, g, 0.3, 0.8);
        let fd = (resolvent(1.4, g + h, 0.3, 0.8).0 - resolvent(1.4, g - h, 0.3, 0.8).0) / (2.0 * h);
        assert!((d - fd).abs() < 1e-7 * d.abs().max(1e-8), "{d} {fd}");
    }
}
