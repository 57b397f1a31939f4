use super::timemap::{RealFn, TimeChange};
use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::specfun::BesselOrder;
use std::fmt;
use std::sync::Arc;

/// Spatial domain of the Bessel problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `z >= y(tau)`.
    SemiInfinite,
    /// `0 <= z <= y(tau)`.
    Bounded,
    /// `y(tau) <= z <= h(tau)`.
    Strip,
}

/// Moving boundary `tau -> y(tau)`.
#[derive(Clone)]
pub struct Boundary {
    f: RealFn,
    df: Option<RealFn>,
    constant: Option<f64>,
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "Boundary(constant {c})"),
            None => write!(f, "Boundary(y(0) = {})", (self.f)(0.0)),
        }
    }
}

impl Boundary {
    pub fn constant(v: f64) -> Self {
        Boundary { f: Arc::new(move |_| v), df: Some(Arc::new(|_| 0.0)), constant: Some(v) }
    }

    pub fn from_fn(f: RealFn) -> Self {
        Boundary { f, df: None, constant: None }
    }

    pub fn with_derivative(f: RealFn, df: RealFn) -> Self {
        Boundary { f, df: Some(df), constant: None }
    }

    pub fn value(&self, tau: f64) -> f64 {
        (self.f)(tau)
    }

    pub fn derivative(&self, tau: f64) -> f64 {
        if let Some(df) = &self.df {
            return df(tau);
        }
        let h = 1e-5 * (1.0 + tau.abs());
        if tau - h < 0.0 {
            // one-sided second order
            let f0 = (self.f)(tau);
            let f1 = (self.f)(tau + h);
            let f2 = (self.f)(tau + 2.0 * h);
            return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
        }
        ((self.f)(tau + h) - (self.f)(tau - h)) / (2.0 * h)
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }
}

/// Payoff shape on its support.
#[derive(Clone)]
pub enum ProfileShape {
    /// `sum c_i z^{e_i}`, stored as (c_i, e_i).
    Power(Vec<(f64, f64)>),
    /// Arbitrary function times `z^weight`.
    Function { f: RealFn, weight: f64 },
}

/// Initial condition `u0`, zero outside `[lo, hi]`.
#[derive(Clone)]
pub struct InitialProfile {
    pub shape: ProfileShape,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.shape {
            ProfileShape::Power(t) => format!("power {t:?}"),
            ProfileShape::Function { weight, .. } => format!("function x z^{weight}"),
        };
        write!(f, "InitialProfile({kind} on [{}, {}])", self.lo, self.hi)
    }
}

impl InitialProfile {
    pub fn power(terms: Vec<(f64, f64)>, lo: f64, hi: f64) -> Self {
        InitialProfile { shape: ProfileShape::Power(terms), lo, hi }
    }

    pub fn function(f: RealFn, lo: f64, hi: f64) -> Self {
        InitialProfile { shape: ProfileShape::Function { f, weight: 0.0 }, lo, hi }
    }

    pub fn zero() -> Self {
        InitialProfile::power(vec![], 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        !(self.hi > self.lo) || matches!(&self.shape, ProfileShape::Power(t) if t.is_empty())
    }

    /// Value of the raw shape, ignoring the support.
    pub fn shape_value(&self, z: f64) -> f64 {
        match &self.shape {
            ProfileShape::Power(terms) => terms.iter().map(|(c, e)| c * z.powf(*e)).sum(),
            ProfileShape::Function { f, weight } => {
                if *weight == 0.0 {
                    f(z)
                } else {
                    z.powf(*weight) * f(z)
                }
            }
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        if z < self.lo || z > self.hi {
            return 0.0;
        }
        self.shape_value(z)
    }

    /// Multiply by `z^c`.
    pub fn times_power(&self, c: f64) -> Self {
        let shape = match &self.shape {
            ProfileShape::Power(terms) => ProfileShape::Power(terms.iter().map(|(a, e)| (*a, e + c)).collect()),
            ProfileShape::Function { f, weight } => ProfileShape::Function { f: f.clone(), weight: weight + c },
        };
        InitialProfile { shape, lo: self.lo, hi: self.hi }
    }

    /// Restrict the support to `[lo, hi]`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Self {
        let (a, b) = (self.lo.max(lo), self.hi.min(hi));
        if b > a {
            InitialProfile { shape: self.shape.clone(), lo: a, hi: b }
        } else {
            InitialProfile::zero()
        }
    }

    /// `int_lo^hi |z^p u0(z)| dz` by Gauss-Legendre.
    pub fn weighted_abs_integral(&self, p: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let gl = GaussLegendre::cached(64);
        gl.integrate(self.lo, self.hi, |z| (z.powf(p) * self.shape_value(z)).abs())
    }
}

/// Map from financial coordinates to the Bessel variables and back.
#[derive(Clone)]
pub struct BackMap {
    /// Spot (S or r) to z at calendar time zero.
    pub to_z: RealFn,
    /// z back to spot at calendar time zero.
    pub from_z: RealFn,
    /// Multiplicative factor applied to the Bessel solution.
    pub prefactor: RealFn,
    /// Exponent c in `u = z^c w` accumulated by order lifts.
    pub lift_exponent: f64,
    /// Clock relating tau to calendar time, when known.
    pub clock: Option<Arc<TimeChange>>,
}

impl fmt::Debug for BackMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackMap").field("lift_exponent", &self.lift_exponent).finish()
    }
}

impl BackMap {
    pub fn identity() -> Self {
        BackMap {
            to_z: Arc::new(|x| x),
            from_z: Arc::new(|x| x),
            prefactor: Arc::new(|_| 1.0),
            lift_exponent: 0.0,
            clock: None,
        }
    }

    /// Financial value from the Bessel solution `w` at the spot.
    pub fn price(&self, spot: f64, w: f64) -> f64 {
        let z = (self.to_z)(spot);
        let lift = if self.lift_exponent == 0.0 { 1.0 } else { z.powf(self.lift_exponent) };
        (self.prefactor)(spot) * lift * w
    }
}

/// Bessel PDE `u_tau = u_zz / 2 + (b / z) u_z` on a moving domain with zero
/// Dirichlet data on the moving boundaries.
#[derive(Clone, Debug)]
pub struct BesselProblem {
    pub b: f64,
    pub domain: Domain,
    pub y: Boundary,
    pub h: Option<Boundary>,
    pub u0: InitialProfile,
    pub tau_max: f64,
    pub back: BackMap,
}

impl BesselProblem {
    pub fn new(
        b: f64,
        domain: Domain,
        y: Boundary,
        h: Option<Boundary>,
        u0: InitialProfile,
        tau_max: f64,
        back: BackMap,
    ) -> Result<Self> {
        if !b.is_finite() {
            return Err(invalid("drift coefficient b must be finite"));
        }
        if !(tau_max > 0.0) || !tau_max.is_finite() {
            return Err(invalid(format!("tau_max {tau_max} must be positive")));
        }
        for i in 0..=8 {
            let t = tau_max * i as f64 / 8.0;
            let yv = y.value(t);
            if !(yv > 0.0) || !yv.is_finite() {
                return Err(invalid(format!("boundary y({t}) = {yv} must be positive")));
            }
            if domain == Domain::Strip {
                let hv = h.as_ref().ok_or_else(|| invalid("strip domain needs an upper boundary"))?.value(t);
                if !(hv > yv) {
                    return Err(invalid(format!("upper boundary h({t}) = {hv} must exceed y = {yv}")));
                }
            }
        }
        if domain != Domain::Strip && h.is_some() {
            return Err(invalid("upper boundary only allowed for strip domains"));
        }
        Ok(BesselProblem { b, domain, y, h, u0, tau_max, back })
    }

    pub fn nu(&self) -> f64 {
        self.b - 0.5
    }

    pub fn order(&self) -> BesselOrder {
        BesselOrder::raw(self.nu())
    }

    /// Replace the initial profile (same geometry).
    pub fn with_profile(&self, u0: InitialProfile) -> Self {
        let mut p = self.clone();
        p.u0 = u0;
        p
    }

    /// Is `z` inside the closed domain at time `tau`?
    pub fn contains(&self, tau: f64, z: f64) -> bool {
        let y = self.y.value(tau);
        match self.domain {
            Domain::SemiInfinite => z >= y,
            Domain::Bounded => z >= 0.0 && z <= y,
            Domain::Strip => z >= y && z <= self.h.as_ref().unwrap().value(tau),
        }
    }

    /// Value of the original problem from a solution `w` of this one at `z`.
    pub fn unlift(&self, z: f64, w: f64) -> f64 {
        if self.back.lift_exponent == 0.0 {
            w
        } else {
            z.powf(self.back.lift_exponent) * w
        }
    }
}

/// Lift to the order `1 - b` through `w = z^{2b-1} u`; valid for any `b < 1/2`.
pub fn lift_below_half(problem: &BesselProblem) -> Result<BesselProblem> {
    if !(problem.b < 0.5) {
        return Err(invalid(format!("lift needs b < 1/2, got {}", problem.b)));
    }
    let c = 2.0 * problem.b - 1.0;
    let mut p = problem.clone();
    p.b = 1.0 - problem.b;
    p.u0 = problem.u0.times_power(c);
    p.back.lift_exponent = problem.back.lift_exponent - c;
    Ok(p)
}

/// Small-order lift for `-1/2 < b < 1/2`.
pub fn small_b_lift(problem: &BesselProblem) -> Result<BesselProblem> {
    if !(problem.b > -0.5 && problem.b < 0.5) {
        return Err(invalid(format!("small-b lift needs -1/2 < b < 1/2, got {}", problem.b)));
    }
    lift_below_half(problem)
}
