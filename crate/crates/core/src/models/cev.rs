use super::curve::TimeCurve;
use super::problem::{BackMap, BesselProblem, Boundary, Domain, InitialProfile};
use super::timemap::TimeChange;
use crate::error::{invalid, Error, Result};
use std::sync::Arc;

/// CEV dynamics `dS = (r - q) S dt + sigma S^{beta + 1} dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct CevModel {
    pub r: TimeCurve,
    pub q: TimeCurve,
    pub sigma: TimeCurve,
    pub beta: f64,
}

impl CevModel {
    pub fn new(r: TimeCurve, q: TimeCurve, sigma: TimeCurve, beta: f64) -> Result<Self> {
        r.validate()?;
        q.validate()?;
        sigma.validate()?;
        if !beta.is_finite() || beta == 0.0 || beta <= -1.0 {
            return Err(invalid(format!("CEV beta {beta} must be non-zero and > -1")));
        }
        Ok(CevModel { r, q, sigma, beta })
    }

    /// Drift coefficient of the Bessel reduction.
    pub fn bessel_b(&self) -> f64 {
        (self.beta + 1.0) / (2.0 * self.beta)
    }

    /// Mirrored state variable `x = S^{-beta} / beta` (sign chosen positive).
    pub fn state_variable(&self, s: f64) -> f64 {
        s.powf(-self.beta) / self.beta.abs()
    }

    pub fn spot_from_state(&self, x: f64) -> f64 {
        (self.beta.abs() * x).powf(-1.0 / self.beta)
    }
}

/// Barrier style.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    UpAndOut,
    DownAndOut,
    Double,
}

/// Knock-out barrier specification.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub lower: Option<TimeCurve>,
    pub upper: Option<TimeCurve>,
    /// Barrier quoted on the bond price rather than on the rate (CIR).
    pub on_bond: bool,
}

impl BarrierSpec {
    pub fn up_and_out(h: TimeCurve) -> Self {
        BarrierSpec { kind: BarrierKind::UpAndOut, lower: None, upper: Some(h), on_bond: false }
    }

    pub fn down_and_out(l: TimeCurve) -> Self {
        BarrierSpec { kind: BarrierKind::DownAndOut, lower: Some(l), upper: None, on_bond: false }
    }

    pub fn double(l: TimeCurve, h: TimeCurve) -> Self {
        BarrierSpec { kind: BarrierKind::Double, lower: Some(l), upper: Some(h), on_bond: false }
    }

    pub fn bond_floor(lf: TimeCurve) -> Self {
        BarrierSpec { kind: BarrierKind::DownAndOut, lower: Some(lf), upper: None, on_bond: true }
    }

    pub fn validate(&self) -> Result<()> {
        let need = |c: &Option<TimeCurve>, name: &str| -> Result<()> {
            match c {
                Some(c) => c.validate(),
                None => Err(invalid(format!("{name} barrier missing"))),
            }
        };
        match self.kind {
            BarrierKind::UpAndOut => need(&self.upper, "upper"),
            BarrierKind::DownAndOut => need(&self.lower, "lower"),
            BarrierKind::Double => {
                need(&self.lower, "lower")?;
                need(&self.upper, "upper")
            }
        }
    }
}

/// Time changes for the CEV reduction at maturity `T`:
/// `phi(t) = int_t^T sigma^2`, `F = exp(int f dphi)` with
/// `f = -beta (r - q) / sigma^2`, and `tau(phi) = int_0^phi F^2`.
#[derive(Debug, Clone)]
pub struct CevTimeMaps {
    model: CevModel,
    maturity: f64,
    clock: Arc<TimeChange>,
}

impl CevTimeMaps {
    pub fn new(model: &CevModel, maturity: f64) -> Result<Self> {
        if !(maturity > 0.0) {
            return Err(invalid(format!("maturity {maturity} must be positive")));
        }
        let m = model.clone();
        let rate = Arc::new(move |s: f64| {
            let f = log_f_between(&m, s, maturity).exp();
            f * f * m.sigma.value(s).powi(2)
        });
        let clock = Arc::new(TimeChange::new(maturity, rate)?);
        Ok(CevTimeMaps { model: model.clone(), maturity, clock })
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn clock(&self) -> Arc<TimeChange> {
        self.clock.clone()
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.model.sigma.integral_of_square(t, self.maturity)
    }

    /// Calendar time at which `phi` reaches the given value.
    pub fn t_of_phi(&self, phi: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.maturity);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) > phi {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * self.maturity {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// F at calendar time t.
    pub fn big_f_at(&self, t: f64) -> f64 {
        log_f_between(&self.model, t, self.maturity).exp()
    }

    pub fn big_f_of_phi(&self, phi: f64) -> f64 {
        self.big_f_at(self.t_of_phi(phi))
    }

    pub fn tau_of_t(&self, t: f64) -> f64 {
        self.clock.tau_of_t(t)
    }

    pub fn tau_of_phi(&self, phi: f64) -> f64 {
        self.tau_of_t(self.t_of_phi(phi))
    }

    pub fn t_of_tau(&self, tau: f64) -> f64 {
        self.clock.t_of_tau(tau)
    }

    pub fn tau_max(&self) -> f64 {
        self.clock.tau_max()
    }
}

fn log_f_between(m: &CevModel, t: f64, maturity: f64) -> f64 {
    -m.beta * (m.r.integral(t, maturity) - m.q.integral(t, maturity))
}

/// Reduce a CEV barrier call to a Bessel problem.
///
/// Up-and-out calls map to a semi-infinite domain for `beta > 0` and to a
/// bounded one for `beta < 0`; double barriers map to a strip.  The
/// returned problem is not lifted.
pub fn cev_to_bessel(model: &CevModel, barrier: &BarrierSpec, strike: f64, maturity: f64) -> Result<BesselProblem> {
    barrier.validate()?;
    if !(strike > 0.0) {
        return Err(invalid(format!("strike {strike} must be positive")));
    }
    let maps = Arc::new(CevTimeMaps::new(model, maturity)?);
    let beta = model.beta;
    let b = model.bessel_b();
    let discount = (-model.r.integral(0.0, maturity)).exp();
    let ab = beta.abs();
    let level = move |s: f64, f: f64| s.powf(-beta) * f / ab;
    let curve_boundary = |c: &TimeCurve| -> Result<Boundary> {
        let c = c.clone();
        let mp = maps.clone();
        for i in 0..=16 {
            let t = maturity * i as f64 / 16.0;
            if !(c.value(t) > 0.0) {
                return Err(invalid(format!("barrier level must be positive, got {} at t={t}", c.value(t))));
            }
        }
        let f = Arc::new(move |tau: f64| {
            let t = mp.t_of_tau(tau);
            level(c.value(t), mp.big_f_at(t))
        });
        Ok(Boundary::from_fn(f))
    };
    let zk = strike.powf(-beta) / ab;
    // (ab z)^{-1/beta} - K
    let terms = vec![(discount * ab.powf(-1.0 / beta), -1.0 / beta), (-discount * strike, 0.0)];
    let (domain, y, h, lo, hi) = match (barrier.kind, beta > 0.0) {
        (BarrierKind::UpAndOut, true) => {
            let y = curve_boundary(barrier.upper.as_ref().unwrap())?;
            let y0 = y.value(0.0);
            (Domain::SemiInfinite, y, None, y0, zk)
        }
        (BarrierKind::UpAndOut, false) => {
            let y = curve_boundary(barrier.upper.as_ref().unwrap())?;
            let y0 = y.value(0.0);
            (Domain::Bounded, y, None, zk, y0)
        }
        (BarrierKind::DownAndOut, false) => {
            let y = curve_boundary(barrier.lower.as_ref().unwrap())?;
            let y0 = y.value(0.0);
            (Domain::SemiInfinite, y, None, y0.max(zk), f64::INFINITY)
        }
        (BarrierKind::DownAndOut, true) => {
            return Err(Error::Unsupported(
                "down-and-out CEV calls with beta > 0 map to an unbounded payoff near z = 0".into(),
            ))
        }
        (BarrierKind::Double, pos) => {
            let (lc, uc) = (barrier.lower.as_ref().unwrap(), barrier.upper.as_ref().unwrap());
            let (yc, hc) = if pos { (uc, lc) } else { (lc, uc) };
            let y = curve_boundary(yc)?;
            let h = curve_boundary(hc)?;
            let (y0, h0) = (y.value(0.0), h.value(0.0));
            if pos {
                (Domain::Strip, y, Some(h), y0, zk.min(h0))
            } else {
                (Domain::Strip, y, Some(h), zk.max(y0), h0)
            }
        }
    };
    let u0 = if hi > lo { InitialProfile::power(terms, lo, hi) } else { InitialProfile::zero() };
    let f0 = maps.big_f_at(0.0);
    let back = BackMap {
        to_z: Arc::new(move |s| level(s, f0)),
        from_z: Arc::new(move |z| (ab * z / f0).powf(-1.0 / beta)),
        prefactor: Arc::new(|_| 1.0),
        lift_exponent: 0.0,
        clock: Some(maps.clock()),
    };
    BesselProblem::new(b, domain, y, h, u0, maps.tau_max(), back)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> CevModel {
        CevModel::new(
            TimeCurve::Linear { level: 0.01, slope: -0.01, offset: 1.0 },
            TimeCurve::Linear { level: 0.01, slope: -0.005, offset: 1.0 },
            TimeCurve::SqrtAffine { scale: 0.3, offset: 1.0 },
            0.2,
        )
        .unwrap()
    }

    #[test]
    fn phi_closed_form() {
        let m = family();
        let maps = CevTimeMaps::new(&m, 1.0).unwrap();
        for &t in &[0.0, 0.3, 0.9] {
            let e = -0.5 * 0.09 * (t - 1.0) * (2.0 + t + 1.0);
            assert!((maps.phi(t) - e).abs() < 1e-14);
        }
    }

    #[test]
    fn big_f_matches_closed_form_in_tau() {
        let m = family();
        let maps = CevTimeMaps::new(&m, 1.0).unwrap();
        for &t in &[0.0, 0.25, 0.5, 0.75] {
            let tau = maps.tau_of_t(t);
            let e = (0.09 + 2.0 * 0.2 * tau * (0.01 - 0.005)).sqrt() / 0.3;
            assert!((maps.big_f_at(t) - e).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn spot_round_trip() {
        let m = family();
        let p = cev_to_bessel(&m, &BarrierSpec::up_and_out(TimeCurve::Constant(100.0)), 64.0, 0.5).unwrap();
        for &s in &[60.0, 70.0, 99.0] {
            let z = (p.back.to_z)(s);
            assert!(((p.back.from_z)(z) - s).abs() < 1e-10 * s);
        }
        assert_eq!(p.domain, Domain::SemiInfinite);
        assert!((p.b - 3.0).abs() < 1e-15);
    }
}
