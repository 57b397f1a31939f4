use crate::error::{invalid, Result};
use crate::quadrature::{simpson_adaptive, GaussLegendre};
use std::fmt;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const TABLE_SIZE: usize = 512;

/// Backward clock `tau(t) = int_t^T rate(s) ds` with its inverse.
///
/// The cumulative integral is tabulated on a uniform grid; evaluation adds
/// an 8-point Gauss-Legendre rule over the partial cell and the inverse is
/// polished by safeguarded Newton.
#[derive(Clone)]
pub struct TimeChange {
    horizon: f64,
    rate: RealFn,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl fmt::Debug for TimeChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeChange")
            .field("horizon", &self.horizon)
            .field("tau_max", &self.tau_max())
            .finish()
    }
}

impl TimeChange {
    pub fn new(horizon: f64, rate: RealFn) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("time horizon {horizon} must be positive")));
        }
        let h = horizon / TABLE_SIZE as f64;
        let nodes: Vec<f64> = (0..=TABLE_SIZE).map(|i| i as f64 * h).collect();
        let mut cumulative = vec![0.0; TABLE_SIZE + 1];
        for i in (0..TABLE_SIZE).rev() {
            let piece = simpson_adaptive(&|s| rate(s), nodes[i], nodes[i + 1], 1e-15);
            if !(piece >= 0.0) {
                return Err(invalid("time-change rate must be non-negative"));
            }
            cumulative[i] = cumulative[i + 1] + piece;
        }
        if !(cumulative[0] > 0.0) {
            return Err(invalid("time change is degenerate (zero total clock)"));
        }
        Ok(TimeChange { horizon, rate, nodes, cumulative })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tau_max(&self) -> f64 {
        self.cumulative[0]
    }

    pub fn rate(&self, t: f64) -> f64 {
        (self.rate)(t)
    }

    fn cell(&self, t: f64) -> usize {
        let h = self.horizon / TABLE_SIZE as f64;
        ((t / h).floor().max(0.0) as usize).min(TABLE_SIZE - 1)
    }

    /// tau as a function of calendar time t in [0, T].
    pub fn tau_of_t(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let k = self.cell(t);
        let b = self.nodes[k + 1];
        if t >= b {
            return self.cumulative[k + 1];
        }
        let gl = GaussLegendre::cached(8);
        self.cumulative[k + 1] + gl.integrate(t, b, |s| (self.rate)(s))
    }

    /// Calendar time t for a given tau in [0, tau_max].
    pub fn t_of_tau(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return self.horizon;
        }
        if tau >= self.tau_max() {
            return 0.0;
        }
        let k = self.cumulative.partition_point(|&c| c > tau);
        // cumulative[k-1] > tau >= cumulative[k]
        let (mut lo, mut hi) = (self.nodes[k - 1], self.nodes[k]);
        let (c_lo, c_hi) = (self.cumulative[k - 1], self.cumulative[k]);
        let mut t = lo + (hi - lo) * (c_lo - tau) / (c_lo - c_hi);
        for _ in 0..60 {
            let f = self.tau_of_t(t) - tau;
            if f > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = -(self.rate)(t);
            let mut nt = if d != 0.0 { t - f / d } else { 0.5 * (lo + hi) };
            if !(nt >= lo && nt <= hi) {
                nt = 0.5 * (lo + hi);
            }
            if (nt - t).abs() <= 1e-15 * self.horizon.max(1.0) {
                return nt;
            }
            t = nt;
        }
        t
    }
}
