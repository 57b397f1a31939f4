//! Bessel-potential pricer: double-layer potentials on the moving boundaries,
//! densities from second-kind Volterra equations.

use crate::error::{invalid, Result};
use crate::green::{
    bessel_density_origin, heat_convolution_tol, kernel_diagonal, kernel_smooth_factor, KernelMode,
};
use crate::models::{lift_below_half, BesselProblem, Boundary, Domain, InitialProfile};
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::volterra::{
    multi_rhs_solve, residual, residual_2x2, solve_system_2x2, uniform_grid, KernelMatrix, Singularity,
    VolterraProblem, VolterraSystem2,
};
use rayon::prelude::*;

/// Discretization controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    /// Number of time intervals on `[0, tau_max]`.
    pub m: usize,
    /// Relative tolerance of the initial-data convolutions.
    pub z_quad_tol: f64,
    pub kernel: KernelMode,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig { m: 100, z_quad_tol: 1e-8, kernel: KernelMode::Exact }
    }
}

impl BpConfig {
    pub fn with_m(m: usize) -> Self {
        BpConfig { m, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 8 {
            return Err(invalid(format!("BP grid needs M >= 8, got {}", self.m)));
        }
        if !(self.z_quad_tol > 0.0) {
            return Err(invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }
}

/// Densities and discrete diagnostics of one solve.
#[derive(Debug, Clone)]
pub struct BpSolution {
    pub nodes: Vec<f64>,
    /// Density on the lower (or only) boundary.
    pub psi: Vec<f64>,
    /// Density on the upper boundary of a strip.
    pub phi: Option<Vec<f64>>,
    /// Boundary data on the lower (or only) boundary.
    pub rhs: Vec<f64>,
    pub rhs_upper: Option<Vec<f64>>,
    /// Max-norm defect of the discrete Volterra equations.
    pub residual: f64,
}

/// Values at the requested points.
#[derive(Debug, Clone)]
pub struct BpPrices {
    pub z: Vec<f64>,
    /// Solution of the (unlifted) Bessel problem at `tau_max`.
    pub u: Vec<f64>,
    /// Financial prices through the back map.
    pub price: Vec<f64>,
    /// Count of values below `-1e-10` clamped to zero.
    pub clamped: usize,
    pub solution: BpSolution,
}

enum Kernels {
    Single(KernelMatrix),
    Strip { k11: KernelMatrix, k12: KernelMatrix, k21: KernelMatrix, k22: KernelMatrix },
}

/// Kernel matrices for one geometry, shared across initial profiles.
pub struct BpPricer {
    problem: BesselProblem,
    /// Exponent c of the order lift `w = z^c u` applied at construction.
    lift: f64,
    cfg: BpConfig,
    nodes: Vec<f64>,
    ys: Vec<f64>,
    hs: Vec<f64>,
    kernels: Kernels,
}

/// One-sided limits of the initial profile's contribution at a boundary
/// point: `-(u0(y-) [lo < y] + u0(y+) [hi > y]) / 2`.
fn boundary_start(u0: &InitialProfile, y: f64) -> f64 {
    if u0.is_zero() {
        return 0.0;
    }
    let eps = 1e-12 * y.abs().max(1.0);
    let mut s = 0.0;
    if u0.lo < y && u0.hi >= y {
        s += u0.shape_value((y - eps).max(u0.lo));
    }
    if u0.hi > y && u0.lo <= y {
        s += u0.shape_value((y + eps).min(u0.hi));
    }
    -0.5 * s
}

/// Boundary data `varsigma(tau_j) = -int u0(zeta) q_{tau_j}(y(tau_j), zeta) d zeta`.
pub fn boundary_data(u0: &InitialProfile, b: f64, nodes: &[f64], y: &[f64], tol: f64) -> Vec<f64> {
    nodes
        .par_iter()
        .zip(y.par_iter())
        .map(|(&t, &yv)| if t == 0.0 { boundary_start(u0, yv) } else { -heat_convolution_tol(t, yv, u0, b, tol) })
        .collect()
}

/// `varsigma_0(tau) = -int u0(zeta) q_tau(0, zeta) d zeta`.
pub fn origin_offset(u0: &InitialProfile, b: f64, tau: f64) -> Result<f64> {
    if u0.is_zero() {
        return Ok(0.0);
    }
    if tau <= 0.0 {
        return Ok(0.0);
    }
    origin_density_check(b)?;
    let st = tau.sqrt();
    let hi = u0.hi.min(u0.lo.max(0.0) + 40.0 * st + 10.0 * st * b.abs().sqrt());
    let f = |zeta: f64| bessel_density_origin(tau, zeta, b).unwrap_or(0.0) * u0.shape_value(zeta);
    Ok(-integrate_adaptive(f, u0.lo.max(0.0), hi, &[], 1e-15, 1e-10).0)
}

fn origin_density_check(b: f64) -> Result<()> {
    if !(b > -0.5) {
        return Err(invalid(format!("origin density needs b > -1/2, got {b}")));
    }
    Ok(())
}

fn sample(bd: &Boundary, nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (nodes.iter().map(|&t| bd.value(t)).collect(), nodes.iter().map(|&t| bd.derivative(t)).collect())
}

fn assemble_block(
    nodes: &[f64],
    target: &[f64],
    source: &[f64],
    diag: Option<&[f64]>,
    b: f64,
    mode: KernelMode,
) -> Result<KernelMatrix> {
    KernelMatrix::assemble(nodes, Singularity::Sqrt, |i, j| {
        if i == j {
            return diag.map_or(0.0, |d| d[i]);
        }
        kernel_smooth_factor(nodes[i] - nodes[j], target[i], source[j], b, mode)
    })
}

impl BpPricer {
    /// Assemble the kernel matrices.  Orders `b < 1/2` are lifted first.
    pub fn new(problem: &BesselProblem, cfg: BpConfig) -> Result<Self> {
        cfg.validate()?;
        let (problem, lift) = if problem.b < 0.5 {
            (lift_below_half(problem)?, 2.0 * problem.b - 1.0)
        } else {
            (problem.clone(), 0.0)
        };
        let nodes = uniform_grid(problem.tau_max, cfg.m)?;
        let b = problem.b;
        let (ys, dys) = sample(&problem.y, &nodes);
        let diag_y: Vec<f64> = ys.iter().zip(&dys).map(|(&y, &d)| kernel_diagonal(y, d, b)).collect();
        let (hs, kernels) = match problem.domain {
            Domain::SemiInfinite | Domain::Bounded => {
                (Vec::new(), Kernels::Single(assemble_block(&nodes, &ys, &ys, Some(&diag_y), b, cfg.kernel)?))
            }
            Domain::Strip => {
                let h = problem.h.as_ref().ok_or_else(|| invalid("strip domain needs an upper boundary"))?;
                let (hs, dhs) = sample(h, &nodes);
                let diag_h: Vec<f64> = hs.iter().zip(&dhs).map(|(&y, &d)| kernel_diagonal(y, d, b)).collect();
                let k11 = assemble_block(&nodes, &ys, &ys, Some(&diag_y), b, cfg.kernel)?;
                let k12 = assemble_block(&nodes, &ys, &hs, None, b, cfg.kernel)?;
                let k21 = assemble_block(&nodes, &hs, &ys, None, b, cfg.kernel)?;
                let k22 = assemble_block(&nodes, &hs, &hs, Some(&diag_h), b, cfg.kernel)?;
                (hs, Kernels::Strip { k11, k12, k21, k22 })
            }
        };
        Ok(BpPricer { problem, lift, cfg, nodes, ys, hs, kernels })
    }

    /// Problem actually solved (after any order lift).
    pub fn problem(&self) -> &BesselProblem {
        &self.problem
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn lifted(&self, u0: &InitialProfile) -> InitialProfile {
        if self.lift == 0.0 {
            u0.clone()
        } else {
            u0.times_power(self.lift)
        }
    }

    fn lead(&self) -> f64 {
        match self.problem.domain {
            Domain::Bounded => -1.0,
            _ => 1.0,
        }
    }

    /// Solve for the densities.  `u0` is given for the unlifted problem.
    pub fn solve(&self, u0: &InitialProfile) -> Result<BpSolution> {
        let w0 = self.lifted(u0);
        self.solve_lifted(&w0)
    }

    fn solve_lifted(&self, w0: &InitialProfile) -> Result<BpSolution> {
        let b = self.problem.b;
        let tol = self.cfg.z_quad_tol;
        let rhs = boundary_data(w0, b, &self.nodes, &self.ys, tol);
        match &self.kernels {
            Kernels::Single(k) => {
                let vp = VolterraProblem::new(k.clone(), self.lead(), rhs)?;
                let psi = multi_rhs_solve(&vp, std::slice::from_ref(&vp.rhs))?.remove(0);
                let res = residual(&vp, &psi);
                Ok(BpSolution { nodes: self.nodes.clone(), psi, phi: None, rhs: vp.rhs, rhs_upper: None, residual: res })
            }
            Kernels::Strip { k11, k12, k21, k22 } => {
                let rhs_h = boundary_data(w0, b, &self.nodes, &self.hs, tol);
                // the upper potential jumps by -Phi when approached from inside
                let sys = VolterraSystem2 {
                    k11: k11.clone(),
                    k12: k12.clone(),
                    k21: k21.clone(),
                    k22: k22.clone(),
                    lead: (1.0, -1.0),
                    rhs: (rhs, rhs_h),
                };
                let (psi, phi) = solve_system_2x2(&sys)?;
                let res = residual_2x2(&sys, &psi, &phi);
                let (rhs, rhs_h) = sys.rhs;
                Ok(BpSolution {
                    nodes: self.nodes.clone(),
                    psi,
                    phi: Some(phi),
                    rhs,
                    rhs_upper: Some(rhs_h),
                    residual: res,
                })
            }
        }
    }

    /// Solve several profiles against the shared kernel.
    pub fn solve_many(&self, profiles: &[InitialProfile]) -> Result<Vec<BpSolution>> {
        profiles.par_iter().map(|u0| self.solve(u0)).collect()
    }

    /// `int_0^tau_max density(k) K(tau_max, z, k, bd(k)) dk` with the density
    /// piecewise linear and the kernel integrated adaptively on each panel.
    fn potential(&self, density: &[f64], bd: &[f64], z: f64) -> f64 {
        let b = self.problem.b;
        let mode = self.cfg.kernel;
        let t = self.problem.tau_max;
        let gl = GaussLegendre::cached(16);
        let n = self.nodes.len();
        let mut total = 0.0;
        for j in 0..n - 1 {
            let (l, r) = (self.nodes[j], self.nodes[j + 1]);
            let h = r - l;
            let (pl, pr) = (density[j], density[j + 1]);
            let (yl, yr) = (bd[j], bd[j + 1]);
            if pl == 0.0 && pr == 0.0 {
                continue;
            }
            let f = |k: f64| {
                let s = t - k;
                if s <= 0.0 {
                    return 0.0;
                }
                let w = (k - l) / h;
                let yk = yl + (yr - yl) * w;
                let p = pl + (pr - pl) * w;
                p * kernel_smooth_factor(s, z, yk, b, mode) / s.sqrt()
            };
            let d = (z - 0.5 * (yl + yr)).abs();
            // panels far from the evaluation time in units of the spread are smooth
            if j + 1 < n - 1 && (t - r) > 4.0 * h && d * d < 50.0 * (t - r) {
                total += gl.integrate(l, r, f);
            } else {
                let tol = 1e-3 * self.cfg.z_quad_tol;
                total += integrate_adaptive(f, l, r, &[], 1e-16, tol).0;
            }
        }
        total
    }

    /// `w(tau_max, z)` for the lifted problem.
    fn value_lifted(&self, sol: &BpSolution, w0: &InitialProfile, z: f64) -> f64 {
        let t = self.problem.tau_max;
        let b = self.problem.b;
        let n = self.nodes.len();
        let yl = self.ys[n - 1];
        let tol = 1e-12 * yl.max(1.0);
        let conv = heat_convolution_tol(t, z, w0, b, self.cfg.z_quad_tol);
        // on a boundary the discrete boundary relation gives the limit
        if (z - yl).abs() < tol {
            return self.boundary_limit(sol, 0) + conv;
        }
        if !self.hs.is_empty() && (z - self.hs[n - 1]).abs() < tol {
            return self.boundary_limit(sol, 1) + conv;
        }
        let mut v = self.potential(&sol.psi, &self.ys, z);
        if let Some(phi) = &sol.phi {
            v += self.potential(phi, &self.hs, z);
        }
        v + conv
    }

    fn boundary_limit(&self, sol: &BpSolution, which: usize) -> f64 {
        let n = self.nodes.len();
        let i = n - 1;
        let dot = |k: &KernelMatrix, v: &[f64]| -> f64 { k.row(i).iter().zip(v).map(|(w, p)| w * p).sum() };
        match (&self.kernels, which) {
            (Kernels::Single(k), _) => self.lead() * sol.psi[i] + dot(k, &sol.psi),
            (Kernels::Strip { k11, k12, .. }, 0) => {
                sol.psi[i] + dot(k11, &sol.psi) + dot(k12, sol.phi.as_ref().unwrap())
            }
            (Kernels::Strip { k21, k22, .. }, _) => {
                let phi = sol.phi.as_ref().unwrap();
                -phi[i] + dot(k21, &sol.psi) + dot(k22, phi)
            }
        }
    }

    /// Solve and evaluate at Bessel-coordinate points `zs`.
    pub fn price_points(&self, u0: &InitialProfile, zs: &[f64]) -> Result<BpPrices> {
        let w0 = self.lifted(u0);
        let sol = self.solve_lifted(&w0)?;
        self.evaluate(&sol, u0, zs)
    }

    /// Evaluate a solved density at `zs`.
    pub fn evaluate(&self, sol: &BpSolution, u0: &InitialProfile, zs: &[f64]) -> Result<BpPrices> {
        let w0 = self.lifted(u0);
        let t = self.problem.tau_max;
        for &z in zs {
            if !z.is_finite() || !self.problem.contains(t, z) {
                return Err(invalid(format!("evaluation point z = {z} lies outside the domain at tau_max")));
            }
        }
        let raw: Vec<f64> = zs.par_iter().map(|&z| self.value_lifted(sol, &w0, z)).collect();
        let mut clamped = 0;
        let mut u = Vec::with_capacity(zs.len());
        let mut price = Vec::with_capacity(zs.len());
        for (&z, &w) in zs.iter().zip(&raw) {
            let w = if w < 0.0 {
                if w < -1e-10 {
                    clamped += 1;
                }
                0.0
            } else {
                w
            };
            let orig = if self.lift == 0.0 { w } else { z.powf(-self.lift) * w };
            u.push(orig);
            let spot = (self.problem.back.from_z)(z);
            price.push(self.problem.back.price(spot, w));
        }
        Ok(BpPrices { z: zs.to_vec(), u, price, clamped, solution: sol.clone() })
    }
}

fn expect(problem: &BesselProblem, d: Domain) -> Result<()> {
    if problem.domain != d {
        return Err(invalid(format!("expected a {d:?} problem, got {:?}", problem.domain)));
    }
    Ok(())
}

/// Price on `z >= y(tau)`.
pub fn price_semi_infinite(problem: &BesselProblem, cfg: BpConfig, zs: &[f64]) -> Result<BpPrices> {
    expect(problem, Domain::SemiInfinite)?;
    BpPricer::new(problem, cfg)?.price_points(&problem.u0, zs)
}

/// Price on `0 < z < y(tau)`.
pub fn price_bounded(problem: &BesselProblem, cfg: BpConfig, zs: &[f64]) -> Result<BpPrices> {
    expect(problem, Domain::Bounded)?;
    BpPricer::new(problem, cfg)?.price_points(&problem.u0, zs)
}

/// Price on the strip `y(tau) <= z <= h(tau)`.
pub fn price_double_barrier(problem: &BesselProblem, cfg: BpConfig, zs: &[f64]) -> Result<BpPrices> {
    expect(problem, Domain::Strip)?;
    BpPricer::new(problem, cfg)?.price_points(&problem.u0, zs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BackMap;

    fn toy(domain: Domain, y: f64, lo: f64, hi: f64) -> BesselProblem {
        BesselProblem::new(
            1.5,
            domain,
            Boundary::constant(y),
            None,
            InitialProfile::power(vec![(1.0, 1.0), (-1.0, 0.0)], lo, hi),
            0.2,
            BackMap::identity(),
        )
        .unwrap()
    }

    #[test]
    fn zero_payoff_prices_zero() {
        let p = toy(Domain::SemiInfinite, 1.0, 1.0, 3.0).with_profile(InitialProfile::zero());
        let r = price_semi_infinite(&p, BpConfig::with_m(16), &[1.5, 2.0]).unwrap();
        assert!(r.price.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn start_limit_is_half_jump() {
        let u0 = InitialProfile::power(vec![(1.0, 0.0)], 1.0, 2.0);
        assert_eq!(boundary_start(&u0, 1.0), -0.5);
        assert_eq!(boundary_start(&u0, 1.5), -1.0);
    }

    #[test]
    fn rejects_wrong_domain() {
        let p = toy(Domain::Bounded, 3.0, 1.0, 3.0);
        assert!(price_semi_infinite(&p, BpConfig::default(), &[1.0]).is_err());
    }
}
