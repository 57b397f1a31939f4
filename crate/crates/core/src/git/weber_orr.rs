//! Weber-Orr transform on `z > y(tau)`.

use super::remainder::{remainder_bound, RemainderInputs};
use super::{check_finite, corner_limit, moment, GitDensity, Kind};
use crate::error::{invalid, Result};
use crate::models::{lift_below_half, BesselProblem, Domain, InitialProfile};
use crate::quadrature::GaussLegendre;
use crate::specfun::jy_any;
use crate::volterra::{multi_rhs_solve, product_weights, residual, uniform_grid, KernelMatrix, Singularity, VolterraProblem};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeberOrrConfig {
    /// Fixed cut of the `p` integrals; `None` uses `p_scale / sqrt(t)`.
    pub p_max: Option<f64>,
    pub p_scale: f64,
    /// Gauss-Legendre nodes per `p` panel.
    pub p_nodes: usize,
    /// Time intervals of the density grid.
    pub m: usize,
    /// Drop the boundary term when the boundary moves by less than 1%.
    pub slow_boundary_shortcut: bool,
    /// Time nodes `tau_max (i/M)^2` instead of uniform.
    pub graded: bool,
}

impl Default for WeberOrrConfig {
    fn default() -> Self {
        WeberOrrConfig { p_max: None, p_scale: 8.0, p_nodes: 16, m: 10, slow_boundary_shortcut: false, graded: false }
    }
}

impl WeberOrrConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.p_max {
            if !(p > 0.0) || !p.is_finite() {
                return Err(invalid(format!("p_max must be positive, got {p}")));
            }
        }
        if !(self.p_scale > 0.0) {
            return Err(invalid("p_scale must be positive"));
        }
        if self.p_nodes < 16 {
            return Err(invalid(format!("need at least 16 nodes per p panel, got {}", self.p_nodes)));
        }
        if self.m < 2 {
            return Err(invalid(format!("Weber-Orr density grid needs M >= 2, got {}", self.m)));
        }
        Ok(())
    }
}

/// `W = J(pz) Y(py) - Y(pz) J(py)`, `V = J(py)^2 + Y(py)^2` and
/// `Q = J_{+1}(py) Y(py) - Y_{+1}(py) J(py)` at `y = y(tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WoKernel {
    pub w: f64,
    pub v: f64,
    pub q: f64,
}

pub fn wo_kernel_eval(tau: f64, p: f64, z: f64, problem: &BesselProblem) -> Result<WoKernel> {
    let nu = problem.nu();
    if nu < 0.0 {
        return Err(invalid(format!("Weber-Orr kernel needs nu >= 0, got {nu}")));
    }
    if !(p > 0.0) || !(z > 0.0) {
        return Err(invalid("Weber-Orr kernel needs p > 0 and z > 0"));
    }
    let y = problem.y.value(tau);
    let (jz, yz) = jy_any(nu, p * z)?;
    let (jy, yy) = jy_any(nu, p * y)?;
    let (j1, y1) = jy_any(nu + 1.0, p * y)?;
    Ok(WoKernel { w: jz * yy - yz * jy, v: jy * jy + yy * yy, q: j1 * yy - y1 * jy })
}

/// Values at evaluation points.
#[derive(Debug, Clone)]
pub struct WoPrices {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub price: Vec<f64>,
    /// Bound on the part of the `p` integral that was cut off.
    pub remainder_bound: Vec<f64>,
    pub density: GitDensity,
}

/// Semi-infinite pricer with a shared `p` grid and tabulated Bessel values
/// at every density node.
pub struct WeberOrrPricer {
    problem: BesselProblem,
    lift: f64,
    nu: f64,
    nodes: Vec<f64>,
    ys: Vec<f64>,
    p: Vec<f64>,
    pw: Vec<f64>,
    /// `(J, Y)(p_k y_j)` by node `j`.
    tab: Vec<Vec<(f64, f64)>>,
    matrix: KernelMatrix,
    skip: bool,
    cut: f64,
    scale: f64,
    fixed: Option<f64>,
    z_hi: f64,
}

impl WeberOrrPricer {
    /// `z_hi` bounds the evaluation points; it sets the `p` panel width.
    pub fn new(problem: &BesselProblem, cfg: WeberOrrConfig, z_hi: f64) -> Result<Self> {
        cfg.validate()?;
        if problem.domain != Domain::SemiInfinite {
            return Err(invalid(format!("Weber-Orr pricer needs a semi-infinite problem, got {:?}", problem.domain)));
        }
        let (problem, lift) = if problem.b < 0.5 {
            (lift_below_half(problem)?, 2.0 * problem.b - 1.0)
        } else {
            (problem.clone(), 0.0)
        };
        let nu = problem.nu();
        let mut nodes = uniform_grid(problem.tau_max, cfg.m)?;
        if cfg.graded {
            let tm = problem.tau_max;
            nodes = nodes.iter().map(|&t| tm * (t / tm) * (t / tm)).collect();
        }
        let ys: Vec<f64> = nodes.iter().map(|&t| problem.y.value(t)).collect();
        let dys: Vec<f64> = nodes.iter().map(|&t| problem.y.derivative(t)).collect();
        let ymin = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let ymax = ys.iter().cloned().fold(0.0, f64::max);
        let mut hi = z_hi.max(ymax);
        if !problem.u0.is_zero() {
            if !problem.u0.hi.is_finite() {
                return Err(invalid("Weber-Orr pricer needs initial data of bounded support"));
            }
            hi = hi.max(problem.u0.hi);
        }
        if !hi.is_finite() {
            return Err(invalid("evaluation bound must be finite"));
        }
        let spread = (hi - ymin).max(1e-3 * ymin);
        let dt = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let cut = cfg.p_max.unwrap_or(cfg.p_scale / dt.sqrt());
        let width = (PI / spread).min(cut / 16.0);
        let panels = (cut / width).ceil() as usize;
        let gl = GaussLegendre::cached(cfg.p_nodes);
        let (mut p, mut pw) = (Vec::new(), Vec::new());
        for k in 0..panels {
            let a = k as f64 * width;
            gl.push_mapped(a, (a + width).min(cut), &mut p, &mut pw);
        }
        let tab: Vec<Vec<(f64, f64)>> = ys
            .par_iter()
            .map(|&y| p.iter().map(|&q| jy_any(nu, q * y).unwrap_or((f64::NAN, f64::NAN))).collect())
            .collect();
        for row in &tab {
            if row.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
                return Err(invalid("Bessel tabulation failed on the p grid"));
            }
        }
        let moved = ys.iter().map(|&y| (y - ys[0]).abs()).fold(0.0, f64::max) / ys[0];
        let skip = cfg.slow_boundary_shortcut && moved < 0.01;
        let scale = cfg.p_scale;
        let fixed = cfg.p_max;
        let kernel = |i: usize, j: usize| -> f64 {
            let ti = nodes[i];
            if i == j {
                return -(ti.sqrt() * dys[i] / (2.0 * PI).sqrt());
            }
            let t = ti - nodes[j];
            let lim = fixed.unwrap_or(scale / t.sqrt()).min(cut);
            let mut s = 0.0;
            for k in 0..p.len() {
                let q = p[k];
                if q > lim {
                    break;
                }
                let (ji, yi) = tab[i][k];
                let (jj, yj) = tab[j][k];
                let v = ji * ji + yi * yi;
                s += pw[k] * q / v * (-0.5 * q * q * t).exp() * (jj * yi - yj * ji);
            }
            let k = (ys[j] / ys[i]).powf(nu + 1.0) / PI * s;
            -(ti.sqrt() * t.sqrt() * k)
        };
        let matrix = KernelMatrix::assemble(&nodes, Singularity::SqrtBothEnds, kernel)?;
        Ok(WeberOrrPricer { problem, lift, nu, nodes, ys, p, pw, tab, matrix, skip, cut, scale, fixed, z_hi: hi })
    }

    /// Problem actually solved (after any order lift).
    pub fn problem(&self) -> &BesselProblem {
        &self.problem
    }

    fn lifted(&self, u0: &InitialProfile) -> InitialProfile {
        if self.lift == 0.0 {
            u0.clone()
        } else {
            u0.times_power(self.lift)
        }
    }

    fn limit(&self, t: f64) -> f64 {
        self.fixed.unwrap_or(self.scale / t.sqrt()).min(self.cut)
    }

    /// `(int q^{nu+1} u0 J(pq), int q^{nu+1} u0 Y(pq))` on the `p` grid.
    fn moments(&self, w0: &InitialProfile) -> Vec<(f64, f64)> {
        let (nu, a) = (self.nu, self.nu);
        self.p.par_iter().map(|&q| (moment(w0, nu, a, q, Kind::J), moment(w0, nu, a, q, Kind::Y))).collect()
    }

    fn solve_lifted(&self, w0: &InitialProfile, mom: &[(f64, f64)]) -> Result<GitDensity> {
        let n = self.nodes.len();
        if self.skip {
            return Ok(GitDensity { nodes: self.nodes.clone(), phi: vec![0.0; n], residual: 0.0, skipped: true });
        }
        let g: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = self.nodes[i];
                let y = self.ys[i];
                if t == 0.0 {
                    return corner_limit(w0, y, 1.0);
                }
                let lim = self.limit(t);
                let mut s = 0.0;
                for k in 0..self.p.len() {
                    let q = self.p[k];
                    if q > lim {
                        break;
                    }
                    let (j, yv) = self.tab[i][k];
                    let v = j * j + yv * yv;
                    let u0w = yv * mom[k].0 - j * mom[k].1;
                    s += self.pw[k] * q / v * (-0.5 * q * q * t).exp() * u0w;
                }
                t.sqrt() * (-2.0 / (PI * y.powf(self.nu + 1.0)) * s)
            })
            .collect();
        check_finite(&g, "Weber-Orr boundary data")?;
        let vp = VolterraProblem::new(self.matrix.clone(), 1.0, g)?;
        let phi = multi_rhs_solve(&vp, std::slice::from_ref(&vp.rhs))?.remove(0);
        let res = residual(&vp, &phi);
        Ok(GitDensity { nodes: self.nodes.clone(), phi, residual: res, skipped: false })
    }

    /// Boundary density for the initial data `u0` of the unlifted problem.
    pub fn density(&self, u0: &InitialProfile) -> Result<GitDensity> {
        let w0 = self.lifted(u0);
        let mom = self.moments(&w0);
        self.solve_lifted(&w0, &mom)
    }

    fn value(&self, mom: &[(f64, f64)], dens: &GitDensity, z: f64) -> Result<f64> {
        let nu = self.nu;
        let m = self.nodes.len() - 1;
        let t = self.nodes[m];
        let y = self.ys[m];
        if z <= y * (1.0 + 1e-14) {
            return Ok(0.0);
        }
        let zt: Vec<(f64, f64)> = self.p.iter().map(|&q| jy_any(nu, q * z)).collect::<Result<_>>()?;
        let lim = self.limit(t);
        // transformed kernel p W(z) / V at the final time
        let mut wz = Vec::with_capacity(self.p.len());
        for k in 0..self.p.len() {
            let (j, yv) = self.tab[m][k];
            let v = j * j + yv * yv;
            wz.push(self.p[k] * (zt[k].0 * yv - zt[k].1 * j) / v);
        }
        let mut free = 0.0;
        for k in 0..self.p.len() {
            let q = self.p[k];
            if q > lim {
                break;
            }
            let (j, yv) = self.tab[m][k];
            let u0w = yv * mom[k].0 - j * mom[k].1;
            free += self.pw[k] * wz[k] * (-0.5 * q * q * t).exp() * u0w;
        }
        let mut src = 0.0;
        if !dens.skipped && dens.phi.iter().any(|&v| v != 0.0) {
            let f: Vec<f64> = (0..=m)
                .map(|jn| {
                    let ts = t - self.nodes[jn];
                    if ts <= 0.0 {
                        return 0.0;
                    }
                    let lj = self.limit(ts);
                    let jm = &self.tab[m];
                    let mut g = 0.0;
                    for k in 0..self.p.len() {
                        let q = self.p[k];
                        if q > lj {
                            break;
                        }
                        let (js, ysv) = self.tab[jn][k];
                        let wy = js * jm[k].1 - ysv * jm[k].0;
                        g += self.pw[k] * wz[k] * (-0.5 * q * q * ts).exp() * wy;
                    }
                    dens.phi[jn] * self.ys[jn].powf(nu + 1.0) * g
                })
                .collect();
            let wts = product_weights(&self.nodes, t, Singularity::SqrtOrigin);
            for (jn, (wl, wr)) in wts.iter().enumerate() {
                src += wl * f[jn] + wr * f[jn + 1];
            }
        }
        Ok(z.powf(-nu) * (free - 0.5 * src))
    }

    fn bound(&self, w0: &InitialProfile, dens: &GitDensity, z: f64) -> f64 {
        let nu = self.nu;
        let t = self.problem.tau_max;
        let mut samples = Vec::new();
        for j in 0..self.nodes.len() - 1 {
            let (a, b) = (self.nodes[j], self.nodes[j + 1]);
            let s = 0.5 * (a + b);
            let ph = 0.5 * (dens.phi[j] + dens.phi[j + 1]);
            samples.push((s, self.problem.y.value(s), (ph / s.sqrt()).abs(), b - a));
        }
        let inputs = RemainderInputs { m1: w0.weighted_abs_integral(nu + 0.5), density: samples };
        remainder_bound(self.limit(t), t, z, nu, &inputs)
    }

    /// Solve and evaluate at `zs`; `u0` is for the unlifted problem.
    pub fn price_points(&self, u0: &InitialProfile, zs: &[f64]) -> Result<WoPrices> {
        let t = self.problem.tau_max;
        for &z in zs {
            if !z.is_finite() || !self.problem.contains(t, z) {
                return Err(invalid(format!("evaluation point z = {z} lies outside z >= y(tau_max)")));
            }
            if z > self.z_hi * (1.0 + 1e-12) {
                return Err(invalid(format!("evaluation point z = {z} exceeds the bound {} given at setup", self.z_hi)));
            }
        }
        let w0 = self.lifted(u0);
        let mom = self.moments(&w0);
        let density = self.solve_lifted(&w0, &mom)?;
        let vals: Vec<f64> = zs.par_iter().map(|&z| self.value(&mom, &density, z)).collect::<Result<_>>()?;
        let mut u = Vec::new();
        let mut price = Vec::new();
        let mut bound = Vec::new();
        for (&z, &w) in zs.iter().zip(&vals) {
            u.push(if self.lift == 0.0 { w } else { z.powf(-self.lift) * w });
            price.push(self.problem.back.price((self.problem.back.from_z)(z), w));
            bound.push(self.bound(&w0, &density, z));
        }
        Ok(WoPrices { z: zs.to_vec(), u, price, remainder_bound: bound, density })
    }
}

/// Boundary density of the semi-infinite problem.
pub fn psi_semi_infinite(problem: &BesselProblem, cfg: WeberOrrConfig) -> Result<GitDensity> {
    let y = problem.y.value(problem.tau_max);
    WeberOrrPricer::new(problem, cfg, y)?.density(&problem.u0)
}

/// Weber-Orr price on `z >= y` at `zs`.
pub fn price_semi_infinite_wo(problem: &BesselProblem, cfg: WeberOrrConfig, zs: &[f64]) -> Result<WoPrices> {
    let hi = zs.iter().cloned().fold(problem.y.value(problem.tau_max), f64::max);
    WeberOrrPricer::new(problem, cfg, hi)?.price_points(&problem.u0, zs)
}
