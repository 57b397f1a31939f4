//! Second-kind Volterra equations `a Psi(t) + int_0^t K(t, s) Psi(s) ds = g(t)`
//! on a grid, by trapezoidal and product-trapezoidal Nystrom rules.

use crate::error::{invalid, Error, Result};
use rayon::prelude::*;

/// Weight singled out of the kernel and integrated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// Smooth kernel, plain trapezoid.
    Regular,
    /// `K = S(t, s) / sqrt(t - s)`.
    Sqrt,
    /// `K = S(t, s) / sqrt((t - s) s)`.
    SqrtBothEnds,
    /// `K = S(t, s) / sqrt(s)`.
    SqrtOrigin,
}

/// Per-interval weights (towards the left node, towards the right node) for
/// `int_{nodes[0]}^{t} w(s) f(s) ds` with `f` piecewise linear, where `t`
/// coincides with one of the nodes or lies beyond the last.
pub fn product_weights(nodes: &[f64], t: f64, kind: Singularity) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nodes.len().saturating_sub(1));
    for w in nodes.windows(2) {
        let (l, mut r) = (w[0], w[1]);
        let tol = 1e-14 * t.abs().max(1.0);
        if r > t + tol {
            break;
        }
        if (t - r).abs() <= tol {
            r = t;
        }
        let h = r - l;
        let pair = match kind {
            Singularity::Regular => (0.5 * h, 0.5 * h),
            Singularity::Sqrt => {
                let a = (t - r).max(0.0);
                let b = t - l;
                let (sa, sb) = (a.sqrt(), b.sqrt());
                let p32 = |u: f64, su: f64| u * su;
                // int_a^b u^{-1/2} (u - a) du and int_a^b u^{-1/2} (b - u) du
                let to_left = (2.0 / 3.0 * (p32(b, sb) - p32(a, sa)) - 2.0 * a * (sb - sa)) / h;
                let to_right = (2.0 * b * (sb - sa) - 2.0 / 3.0 * (p32(b, sb) - p32(a, sa))) / h;
                (to_left, to_right)
            }
            Singularity::SqrtBothEnds => {
                let asn = |s: f64| (s / t).clamp(0.0, 1.0).sqrt().asin();
                let i0 = 2.0 * (asn(r) - asn(l));
                let rt = |s: f64| (s * (t - s)).max(0.0).sqrt();
                let i1 = t * (asn(r) - asn(l)) - (rt(r) - rt(l));
                ((r * i0 - i1) / h, (i1 - l * i0) / h)
            }
            Singularity::SqrtOrigin => {
                let i0 = 2.0 * (r.sqrt() - l.sqrt());
                let i1 = 2.0 / 3.0 * (r * r.sqrt() - l * l.sqrt());
                ((r * i0 - i1) / h, (i1 - l * i0) / h)
            }
        };
        out.push(pair);
    }
    out
}

/// Lower-triangular quadrature-weighted kernel matrix `W[i][j]`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    nodes: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl KernelMatrix {
    /// `kernel(i, j)` returns the kernel (regular case) or its smooth factor
    /// `S(t_i, t_j)` for the singular weights; it is called for `j <= i`.
    pub fn assemble<F>(nodes: &[f64], kind: Singularity, kernel: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        check_nodes(nodes)?;
        let rows: Vec<Vec<f64>> = (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; i + 1];
                if i == 0 {
                    return row;
                }
                let wts = product_weights(&nodes[..=i], nodes[i], kind);
                for (j, (wl, wr)) in wts.iter().enumerate() {
                    if *wl != 0.0 {
                        row[j] += wl * kernel(i, j);
                    }
                    if *wr != 0.0 {
                        row[j + 1] += wr * kernel(i, j + 1);
                    }
                }
                row
            })
            .collect();
        Ok(KernelMatrix { nodes: nodes.to_vec(), rows })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.rows[i][j]
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(invalid("Volterra grid needs at least two nodes"));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("Volterra grid must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `t_i = i * t_max / m`, `i = 0..=m`.
pub fn uniform_grid(t_max: f64, m: usize) -> Result<Vec<f64>> {
    if m < 1 || !(t_max > 0.0) {
        return Err(invalid(format!("grid needs m >= 1 and t_max > 0 (m = {m}, t_max = {t_max})")));
    }
    let mut g: Vec<f64> = (0..=m).map(|i| t_max * i as f64 / m as f64).collect();
    g[m] = t_max;
    Ok(g)
}

/// Discretized equation `lead * Psi_i + sum_j W_ij Psi_j = g_i`.
#[derive(Debug, Clone)]
pub struct VolterraProblem {
    pub matrix: KernelMatrix,
    pub lead: f64,
    pub rhs: Vec<f64>,
}

impl VolterraProblem {
    pub fn new(matrix: KernelMatrix, lead: f64, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != matrix.len() {
            return Err(invalid(format!("rhs has {} entries, grid has {}", rhs.len(), matrix.len())));
        }
        Ok(VolterraProblem { matrix, lead, rhs })
    }
}

fn forward(matrix: &KernelMatrix, lead: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.len();
    let mut psi = vec![0.0; n];
    for i in 0..n {
        let row = matrix.row(i);
        let hist: f64 = row[..i].iter().zip(&psi[..i]).map(|(w, p)| w * p).sum();
        let piv = lead + row[i];
        if piv.abs() < 1e-14 || !piv.is_finite() {
            return Err(Error::Singular { step: i, pivot: piv });
        }
        psi[i] = (rhs[i] - hist) / piv;
        if !psi[i].is_finite() {
            return Err(Error::NoConvergence { what: "Volterra solve", msg: format!("non-finite density at step {i}") });
        }
    }
    Ok(psi)
}

/// Solve by forward substitution.
pub fn solve_second_kind(problem: &VolterraProblem) -> Result<Vec<f64>> {
    forward(&problem.matrix, problem.lead, &problem.rhs)
}

/// Solve for several right-hand sides sharing the kernel matrix.
pub fn multi_rhs_solve(problem: &VolterraProblem, rhs_set: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rhs_set
        .par_iter()
        .map(|g| {
            if g.len() != problem.matrix.len() {
                return Err(invalid("right-hand side length mismatch"));
            }
            forward(&problem.matrix, problem.lead, g)
        })
        .collect()
}

/// Max-norm defect of the discrete equations.
pub fn residual(problem: &VolterraProblem, psi: &[f64]) -> f64 {
    (0..problem.matrix.len())
        .map(|i| {
            let s: f64 = problem.matrix.row(i).iter().zip(psi).map(|(w, p)| w * p).sum();
            (problem.rhs[i] - problem.lead * psi[i] - s).abs()
        })
        .fold(0.0, f64::max)
}

/// Coupled pair
/// `lead1 Psi1 + K11 Psi1 + K12 Psi2 = g1`, `lead2 Psi2 + K21 Psi1 + K22 Psi2 = g2`.
#[derive(Debug, Clone)]
pub struct VolterraSystem2 {
    pub k11: KernelMatrix,
    pub k12: KernelMatrix,
    pub k21: KernelMatrix,
    pub k22: KernelMatrix,
    pub lead: (f64, f64),
    pub rhs: (Vec<f64>, Vec<f64>),
}

pub fn solve_system_2x2(sys: &VolterraSystem2) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sys.k11.len();
    if [sys.k12.len(), sys.k21.len(), sys.k22.len(), sys.rhs.0.len(), sys.rhs.1.len()].iter().any(|&l| l != n) {
        return Err(invalid("2x2 Volterra system has mismatched sizes"));
    }
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    let dot = |row: &[f64], v: &[f64], i: usize| -> f64 { row[..i].iter().zip(&v[..i]).map(|(w, p)| w * p).sum() };
    for i in 0..n {
        let r1 = sys.rhs.0[i] - dot(sys.k11.row(i), &p1, i) - dot(sys.k12.row(i), &p2, i);
        let r2 = sys.rhs.1[i] - dot(sys.k21.row(i), &p1, i) - dot(sys.k22.row(i), &p2, i);
        let a = sys.lead.0 + sys.k11.row(i)[i];
        let b = sys.k12.row(i)[i];
        let c = sys.k21.row(i)[i];
        let d = sys.lead.1 + sys.k22.row(i)[i];
        let det = a * d - b * c;
        if det.abs() < 1e-14 || !det.is_finite() {
            return Err(Error::Singular { step: i, pivot: det });
        }
        p1[i] = (d * r1 - b * r2) / det;
        p2[i] = (a * r2 - c * r1) / det;
    }
    Ok((p1, p2))
}

/// Max-norm defect of the coupled system.
pub fn residual_2x2(sys: &VolterraSystem2, p1: &[f64], p2: &[f64]) -> f64 {
    let n = sys.k11.len();
    let full = |row: &[f64], v: &[f64]| -> f64 { row.iter().zip(v).map(|(w, p)| w * p).sum() };
    (0..n)
        .map(|i| {
            let e1 = sys.rhs.0[i] - sys.lead.0 * p1[i] - full(sys.k11.row(i), p1) - full(sys.k12.row(i), p2);
            let e2 = sys.rhs.1[i] - sys.lead.1 * p2[i] - full(sys.k21.row(i), p1) - full(sys.k22.row(i), p2);
            e1.abs().max(e2.abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_weights_integrate_linear_exactly() {
        let nodes = uniform_grid(1.0, 7).unwrap();
        let t = 1.0;
        let w = product_weights(&nodes, t, Singularity::Sqrt);
        // int_0^1 (1-s)^{-1/2} s ds = 4/3
        let mut s = 0.0;
        for (j, (a, b)) in w.iter().enumerate() {
            s += a * nodes[j] + b * nodes[j + 1];
        }
        assert!((s - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn both_end_weights_integrate_constant() {
        let nodes = uniform_grid(0.8, 9).unwrap();
        let w = product_weights(&nodes, 0.8, Singularity::SqrtBothEnds);
        let s: f64 = w.iter().map(|(a, b)| a + b).sum();
        assert!((s - std::f64::consts::PI).abs() < 1e-12);
    }
}
