use super::curve::TimeCurve;
use super::problem::{small_b_lift, BackMap, BesselProblem, Boundary, Domain, InitialProfile};
use super::riccati::OdePath;
use super::timemap::TimeChange;
use crate::error::{invalid, Error, Result};
use crate::models::cev::BarrierSpec;
use std::sync::Arc;

/// CIR short rate `dr = kappa (theta - r) dt + sigma sqrt(r) dW` with
/// `theta = m sigma^2 / (2 kappa)`, together with a zero-coupon bond
/// maturing at `bond_expiry`.
#[derive(Debug, Clone)]
pub struct CirModel {
    pub kappa: TimeCurve,
    pub sigma: TimeCurve,
    pub m: f64,
    pub bond_expiry: f64,
    bond: Arc<OdePath>,
}

/// `B' = 1 + kappa B - sigma^2 B^2 / 2` and `(ln A)' = -kappa theta B`,
/// both zero at `end`.
fn affine_path(kappa: &TimeCurve, sigma: &TimeCurve, m: f64, end: f64) -> Result<OdePath> {
    let (k, s) = (kappa.clone(), sigma.clone());
    let rhs = Arc::new(move |t: f64, y: &[f64], d: &mut [f64]| {
        let kv = k.value(t);
        let sv = s.value(t);
        d[0] = 1.0 + kv * y[0] - 0.5 * sv * sv * y[0] * y[0];
        d[1] = -0.5 * m * sv * sv * y[0];
    });
    OdePath::backward(rhs, 0.0, end, &[0.0, 0.0], 1e-13, 1e-3)
}

impl CirModel {
    pub fn new(kappa: TimeCurve, sigma: TimeCurve, m: f64, bond_expiry: f64) -> Result<Self> {
        kappa.validate()?;
        sigma.validate()?;
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid(format!("CIR shape m = {m} must be positive")));
        }
        if !(bond_expiry > 0.0) || !bond_expiry.is_finite() {
            return Err(invalid(format!("bond expiry {bond_expiry} must be positive")));
        }
        for i in 0..=32 {
            let t = bond_expiry * i as f64 / 32.0;
            if !(kappa.value(t) > 0.0) || !(sigma.value(t) > 0.0) {
                return Err(invalid(format!("kappa and sigma must be positive (t = {t})")));
            }
        }
        let bond = Arc::new(affine_path(&kappa, &sigma, m, bond_expiry)?);
        Ok(CirModel { kappa, sigma, m, bond_expiry, bond })
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.m * self.sigma.value(t).powi(2) / (2.0 * self.kappa.value(t))
    }

    /// Bessel drift coefficient `b = m - 1/2`.
    pub fn bessel_b(&self) -> f64 {
        self.m - 0.5
    }

    /// `B(t, S)`; negative for t < S.
    pub fn bond_b(&self, t: f64) -> f64 {
        self.bond.eval(0, t)
    }

    /// `A(t, S)`.
    pub fn bond_a(&self, t: f64) -> f64 {
        self.bond.eval(1, t).exp()
    }

    /// Zero-coupon bond price `F(r, t, S) = A e^{B r}`.
    pub fn zcb_price(&self, r: f64, t: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(invalid(format!("short rate {r} must be >= 0")));
        }
        if !(t >= 0.0 && t <= self.bond_expiry) {
            return Err(invalid(format!("time {t} outside [0, {}]", self.bond_expiry)));
        }
        Ok(self.bond_a(t) * (self.bond_b(t) * r).exp())
    }

    /// Short-rate barrier equivalent to the bond-price level `lf` at time t.
    pub fn rate_barrier(&self, lf: f64, t: f64) -> Result<f64> {
        let a = self.bond_a(t);
        let b = self.bond_b(t);
        if !(lf < a) || !(lf > 0.0) {
            return Err(invalid(format!("bond barrier {lf} must lie in (0, A(t,S) = {a}) at t = {t}")));
        }
        Ok((lf / a).ln() / b)
    }

    pub fn bond_path(&self) -> &OdePath {
        &self.bond
    }
}

/// Closed-form `B(t, S)` for constant coefficients with
/// `h = sqrt(kappa^2 + 2 sigma^2)`.
pub fn cir_bond_b_closed(kappa: f64, sigma: f64, tenor: f64) -> f64 {
    let h = (kappa * kappa + 2.0 * sigma * sigma).sqrt();
    let e = (h * tenor).exp() - 1.0;
    -2.0 * e / ((kappa + h) * e + 2.0 * h)
}

/// Closed form as printed with `theta` in place of `kappa`.
pub fn cir_bond_b_printed(kappa: f64, sigma: f64, theta: f64, tenor: f64) -> f64 {
    let _ = kappa;
    let h = (theta * theta + 2.0 * sigma * sigma).sqrt();
    let e = (h * tenor).exp() - 1.0;
    -2.0 * e / ((theta + h) * e + 2.0 * h)
}

/// Maps used by the CIR reduction on an option of maturity `T`.
#[derive(Debug, Clone)]
pub struct CirTimeMaps {
    /// Components: a(t), int_t^T (kappa - a sigma^2)/2, int_t^T a kappa theta.
    path: Arc<OdePath>,
    clock: Arc<TimeChange>,
    maturity: f64,
}

impl CirTimeMaps {
    pub fn new(model: &CirModel, maturity: f64) -> Result<Self> {
        let (k, s, m) = (model.kappa.clone(), model.sigma.clone(), model.m);
        let rhs = Arc::new(move |t: f64, y: &[f64], d: &mut [f64]| {
            let kv = k.value(t);
            let sv = s.value(t);
            d[0] = 1.0 + kv * y[0] - 0.5 * sv * sv * y[0] * y[0];
            d[1] = -0.5 * (kv - y[0] * sv * sv);
            d[2] = -0.5 * m * sv * sv * y[0];
        });
        let path = Arc::new(OdePath::backward(rhs, 0.0, maturity, &[0.0, 0.0, 0.0], 1e-13, 1e-3)?);
        let p2 = path.clone();
        let sg = model.sigma.clone();
        let rate = Arc::new(move |t: f64| {
            let lg = p2.eval(1, 0.0) - p2.eval(1, t);
            0.25 * (2.0 * lg).exp() * sg.value(t).powi(2)
        });
        let clock = Arc::new(TimeChange::new(maturity, rate)?);
        Ok(CirTimeMaps { path, clock, maturity })
    }

    pub fn a(&self, t: f64) -> f64 {
        self.path.eval(0, t)
    }

    /// `g(t) = exp(int_0^t (kappa - a sigma^2) / 2)`.
    pub fn g(&self, t: f64) -> f64 {
        (self.path.eval(1, 0.0) - self.path.eval(1, t)).exp()
    }

    /// `int_t^T a kappa theta ds`.
    pub fn carry(&self, t: f64) -> f64 {
        self.path.eval(2, t)
    }

    pub fn clock(&self) -> Arc<TimeChange> {
        self.clock.clone()
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }
}

/// Reduce a CIR call on the bond, knocked out when the bond price reaches
/// `L_F(t)` from below (the rate falling to `L(t)`), to a Bessel problem on
/// `z >= y(tau)`.  Applies the small-order lift when `-1/2 < b < 1/2`.
pub fn cir_to_bessel(model: &CirModel, barrier: &BarrierSpec, strike: f64, maturity: f64) -> Result<BesselProblem> {
    barrier.validate()?;
    if !barrier.on_bond || barrier.lower.is_none() || barrier.upper.is_some() {
        return Err(Error::Unsupported("CIR reduction needs a single lower barrier on the bond price".into()));
    }
    if !(maturity > 0.0 && maturity < model.bond_expiry) {
        return Err(invalid(format!(
            "option maturity {maturity} must lie in (0, bond expiry {})",
            model.bond_expiry
        )));
    }
    if !(strike > 0.0) {
        return Err(invalid(format!("strike {strike} must be positive")));
    }
    let lf = barrier.lower.clone().unwrap();
    for i in 0..=32 {
        let t = maturity * i as f64 / 32.0;
        model.rate_barrier(lf.value(t), t)?;
    }
    let maps = Arc::new(CirTimeMaps::new(model, maturity)?);
    let mdl = Arc::new(model.clone());
    let (mp, md) = (maps.clone(), mdl.clone());
    let y = Boundary::from_fn(Arc::new(move |tau: f64| {
        let t = mp.clock.t_of_tau(tau);
        let l = md.rate_barrier(lf.value(t), t).unwrap_or(0.0);
        mp.g(t) * l.sqrt()
    }));
    let gt = maps.g(maturity);
    let (at, bt) = (model.bond_a(maturity), model.bond_b(maturity));
    let y0 = y.value(0.0);
    let u0 = if strike < at {
        let rk = (strike / at).ln() / bt;
        let zk = gt * rk.max(0.0).sqrt();
        if zk > y0 {
            let f = Arc::new(move |z: f64| (at * (bt * z * z / (gt * gt)).exp() - strike).max(0.0));
            InitialProfile::function(f, y0, zk)
        } else {
            InitialProfile::zero()
        }
    } else {
        InitialProfile::zero()
    };
    let (g0, a0, c0) = (maps.g(0.0), maps.a(0.0), maps.carry(0.0));
    let back = BackMap {
        to_z: Arc::new(move |r: f64| g0 * r.max(0.0).sqrt()),
        from_z: Arc::new(move |z: f64| (z / g0).powi(2)),
        prefactor: Arc::new(move |r: f64| (a0 * r + c0).exp()),
        lift_exponent: 0.0,
        clock: Some(maps.clock()),
    };
    let p = BesselProblem::new(model.bessel_b(), Domain::SemiInfinite, y, None, u0, maps.clock.tau_max(), back)?;
    if p.b > -0.5 && p.b < 0.5 {
        small_b_lift(&p)
    } else {
        Ok(p)
    }
}
