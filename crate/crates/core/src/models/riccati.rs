use crate::error::{invalid, Error, Result};
use std::sync::Arc;

type Rhs = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Dense solution of a small ODE system integrated backward from `t1` to
/// `t0` by step-doubling RK4, interpolated with cubic Hermite splines.
#[derive(Clone)]
pub struct OdePath {
    ts: Vec<f64>,
    ys: Vec<Vec<f64>>,
    ds: Vec<Vec<f64>>,
    rhs: Arc<Rhs>,
}

impl std::fmt::Debug for OdePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdePath").field("steps", &self.ts.len()).finish()
    }
}

fn rk4(rhs: &Rhs, t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    rhs(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(t + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(t + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(t + h, &tmp, &mut k4);
    (0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

impl OdePath {
    /// Integrate `y' = rhs(t, y)` from `y(t1) = terminal` down to `t0 < t1`.
    pub fn backward(rhs: Arc<Rhs>, t0: f64, t1: f64, terminal: &[f64], tol: f64, max_step: f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(invalid(format!("ODE interval [{t0}, {t1}] is empty")));
        }
        let n = terminal.len();
        let mut ts = vec![t1];
        let mut ys = vec![terminal.to_vec()];
        let mut d = vec![0.0; n];
        rhs(t1, terminal, &mut d);
        let mut ds = vec![d];
        let mut t = t1;
        let mut y = terminal.to_vec();
        let mut h = -max_step.min(t1 - t0);
        let mut guard = 0usize;
        while t > t0 {
            guard += 1;
            if guard > 10_000_000 {
                return Err(Error::NoConvergence { what: "ODE integration", msg: "too many steps".into() });
            }
            if t + h < t0 {
                h = t0 - t;
            }
            let full = rk4(&*rhs, t, &y, h);
            let half = rk4(&*rhs, t, &y, 0.5 * h);
            let two = rk4(&*rhs, t + 0.5 * h, &half, 0.5 * h);
            let err = full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
            let scale = tol * (1.0 + two.iter().map(|v| v.abs()).fold(0.0, f64::max));
            if !err.is_finite() {
                return Err(Error::NoConvergence { what: "ODE integration", msg: format!("blow-up near t={t}") });
            }
            if err <= scale || h.abs() < 1e-12 {
                t += h;
                y = two.iter().zip(&full).map(|(b, a)| b + (b - a) / 15.0).collect();
                if (t - t0).abs() < 1e-14 {
                    t = t0;
                }
                let mut d = vec![0.0; n];
                rhs(t, &y, &mut d);
                ts.push(t);
                ys.push(y.clone());
                ds.push(d);
                let grow = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 2.0 };
                h = (h * grow.clamp(0.2, 2.0)).max(-max_step);
            } else {
                h *= (0.9 * (scale / err).powf(0.2)).clamp(0.1, 0.9);
            }
        }
        ts.reverse();
        ys.reverse();
        ds.reverse();
        Ok(OdePath { ts, ys, ds, rhs })
    }

    pub fn start(&self) -> f64 {
        self.ts[0]
    }

    pub fn end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Component `c` at time `t` (clamped into the solved interval).
    pub fn eval(&self, c: usize, t: f64) -> f64 {
        let t = t.clamp(self.ts[0], *self.ts.last().unwrap());
        let k = (self.ts.partition_point(|&s| s <= t).max(1) - 1).min(self.ts.len() - 2);
        let (a, b) = (self.ts[k], self.ts[k + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let (y0, y1) = (self.ys[k][c], self.ys[k + 1][c]);
        let (d0, d1) = (self.ds[k][c], self.ds[k + 1][c]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// Right-hand side evaluated on the interpolated state.
    pub fn slope(&self, c: usize, t: f64) -> f64 {
        let n = self.ys[0].len();
        let y: Vec<f64> = (0..n).map(|i| self.eval(i, t)).collect();
        let mut d = vec![0.0; n];
        (self.rhs)(t, &y, &mut d);
        d[c]
    }

    /// Derivative of the interpolant.
    pub fn interp_derivative(&self, c: usize, t: f64) -> f64 {
        let t = t.clamp(self.ts[0], *self.ts.last().unwrap());
        let k = (self.ts.partition_point(|&s| s <= t).max(1) - 1).min(self.ts.len() - 2);
        let (a, b) = (self.ts[k], self.ts[k + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let (y0, y1) = (self.ys[k][c], self.ys[k + 1][c]);
        let (d0, d1) = (self.ds[k][c], self.ds[k + 1][c]);
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -6.0 * s * s + 6.0 * s;
        let dh11 = 3.0 * s * s - 2.0 * s;
        (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
    }
}

/// Solution of a scalar Riccati equation `y' = c0 + c1 y + c2 y^2`.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    path: OdePath,
}

impl RiccatiSolution {
    pub fn eval(&self, t: f64) -> f64 {
        self.path.eval(0, t)
    }

    /// Max |y_interp' - rhs(t, y_interp)| on a uniform probe grid.
    pub fn max_defect(&self, probes: usize) -> f64 {
        let (a, b) = (self.path.start(), self.path.end());
        (0..=probes)
            .map(|i| {
                let t = a + (b - a) * i as f64 / probes as f64;
                (self.path.interp_derivative(0, t) - self.path.slope(0, t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solve `y' = c0(t) + c1(t) y + c2(t) y^2` backward from `y(t_end) = terminal`
/// down to t = 0.
pub fn riccati_solve<C0, C1, C2>(c0: C0, c1: C1, c2: C2, terminal: f64, t_end: f64) -> Result<RiccatiSolution>
where
    C0: Fn(f64) -> f64 + Send + Sync + 'static,
    C1: Fn(f64) -> f64 + Send + Sync + 'static,
    C2: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let rhs: Arc<Rhs> = Arc::new(move |t, y, d| d[0] = c0(t) + c1(t) * y[0] + c2(t) * y[0] * y[0]);
    let path = OdePath::backward(rhs, 0.0, t_end, &[terminal], 1e-13, 1e-3)?;
    Ok(RiccatiSolution { path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_closed_form() {
        // y' = y - y^2 with y(1) = 0.5 -> y(t) = 1/(1 + e^{1-t})
        let s = riccati_solve(|_| 0.0, |_| 1.0, |_| -1.0, 0.5, 1.0).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((s.eval(t) - 1.0 / (1.0 + (1.0 - t).exp())).abs() < 1e-11);
        }
        assert!(s.max_defect(997) < 1e-8);
    }
}
