use besselbarrier::bp::*;
use besselbarrier::fd::{cn_price, FdGrid, FdModel};
use besselbarrier::models::*;

fn table_model() -> CevModel {
    CevModel::new(
        TimeCurve::Linear { level: 0.01, slope: -0.01, offset: 1.0 },
        TimeCurve::Linear { level: 0.01, slope: -0.005, offset: 1.0 },
        TimeCurve::SqrtAffine { scale: 0.3, offset: 1.0 },
        0.1996,
    )
    .unwrap()
}

fn up(h: f64) -> BarrierSpec {
    BarrierSpec::up_and_out(TimeCurve::Constant(h))
}

fn toy_model() -> CevModel {
    CevModel::new(TimeCurve::Constant(0.02), TimeCurve::Constant(0.01), TimeCurve::Constant(2.5), -0.5).unwrap()
}

#[test]
fn first_table_cell() {
    let m = table_model();
    let p = cev_to_bessel(&m, &up(100.0), 59.0, 1.0 / 12.0).unwrap();
    let z = (p.back.to_z)(70.0);
    let r = price_semi_infinite(&p, BpConfig::default(), &[z]).unwrap();
    assert!((r.price[0] / 9.3192 - 1.0).abs() < 0.01, "{}", r.price[0]);
    assert!(r.solution.residual <= 1e-10);
}

#[test]
fn zero_on_the_barrier() {
    let m = table_model();
    for &t in &[1.0 / 12.0, 1.0] {
        let p = cev_to_bessel(&m, &up(100.0), 69.0, t).unwrap();
        let y = p.y.value(p.tau_max);
        let r = price_semi_infinite(&p, BpConfig::default(), &[y]).unwrap();
        assert!(r.price[0].abs() <= 2e-3, "{}", r.price[0]);
    }
}

#[test]
fn zero_payoff() {
    let m = table_model();
    let p = cev_to_bessel(&m, &up(100.0), 69.0, 0.5).unwrap().with_profile(InitialProfile::zero());
    let r = price_semi_infinite(&p, BpConfig::default(), &[p.y.value(p.tau_max) * 1.2]).unwrap();
    assert_eq!(r.price, vec![0.0]);
    let p = cev_to_bessel(&toy_model(), &up(100.0), 70.0, 0.5).unwrap().with_profile(InitialProfile::zero());
    let r = price_bounded(&p, BpConfig::default(), &[p.y.value(p.tau_max) * 0.5]).unwrap();
    assert_eq!(r.price, vec![0.0]);
}

#[test]
fn monotone_in_strike() {
    let m = table_model();
    for &t in &[1.0 / 12.0, 0.5] {
        let mut prev = f64::INFINITY;
        for &k in &[59.0, 64.0, 69.0, 74.0, 79.0, 84.0] {
            let p = cev_to_bessel(&m, &up(100.0), k, t).unwrap();
            let z = (p.back.to_z)(70.0);
            let v = price_semi_infinite(&p, BpConfig::default(), &[z]).unwrap().price[0];
            assert!(v <= prev);
            prev = v;
        }
    }
}

#[test]
fn refinement_contracts() {
    let m = table_model();
    for &(k, t) in &[(59.0, 1.0 / 12.0), (69.0, 0.5), (84.0, 1.0)] {
        let p = cev_to_bessel(&m, &up(100.0), k, t).unwrap();
        let z = (p.back.to_z)(70.0);
        let v: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&mm| price_semi_infinite(&p, BpConfig::with_m(mm), &[z]).unwrap().price[0])
            .collect();
        let ratio = ((v[2] - v[1]) / (v[1] - v[0])).abs();
        assert!(ratio <= 0.6, "K={k} T={t}: {v:?}");
    }
}

#[test]
fn bounded_toy_matches_fd() {
    let m = toy_model();
    let bar = up(100.0);
    for &k in &[60.0, 70.0, 80.0] {
        let p = cev_to_bessel(&m, &bar, k, 0.5).unwrap();
        for &s in &[60.0, 70.0, 85.0] {
            let fd = cn_price(FdModel::Cev(&m), &bar, k, 0.5, s, &FdGrid::new(400, 400)).unwrap().price;
            if fd <= 0.1 {
                continue;
            }
            let bp = price_bounded(&p, BpConfig::default(), &[(p.back.to_z)(s)]).unwrap().price[0];
            assert!((bp / fd - 1.0).abs() < 0.005, "K={k} S={s}: {bp} {fd}");
        }
    }
}

#[test]
fn bounded_finite_near_origin() {
    let p = cev_to_bessel(&toy_model(), &up(100.0), 70.0, 0.5).unwrap();
    let r = price_bounded(&p, BpConfig::default(), &[1e-3, 1e-4, 1e-5]).unwrap();
    assert!(r.u.iter().all(|v| v.is_finite()));
    assert!((r.u[1] - r.u[2]).abs() <= 1e-6 + 0.01 * r.u[1].abs(), "{:?}", r.u);
}

fn strip(b: f64, y: f64, h: f64, u0: InitialProfile, tau: f64) -> BesselProblem {
    BesselProblem::new(b, Domain::Strip, Boundary::constant(y), Some(Boundary::constant(h)), u0, tau, BackMap::identity())
        .unwrap()
}

#[test]
fn wide_strip_is_single_barrier() {
    let u0 = InitialProfile::power(vec![(1.0, 1.0), (-1.5, 0.0)], 1.5, 3.0);
    let semi = BesselProblem::new(1.5, Domain::SemiInfinite, Boundary::constant(1.0), None, u0.clone(), 0.2, BackMap::identity())
        .unwrap();
    let wide = strip(1.5, 1.0, 50.0, u0, 0.2);
    let zs = [1.4, 2.0, 2.6];
    let a = price_semi_infinite(&semi, BpConfig::default(), &zs).unwrap();
    let b = price_double_barrier(&wide, BpConfig::default(), &zs).unwrap();
    for i in 0..3 {
        assert!((a.price[i] / b.price[i] - 1.0).abs() < 1e-3, "{} {}", a.price[i], b.price[i]);
    }
}

#[test]
fn strip_vanishes_on_both_barriers() {
    let u0 = InitialProfile::power(vec![(-2.0, 0.0), (3.0, 1.0), (-1.0, 2.0)], 1.0, 2.0);
    let p = strip(1.5, 1.0, 2.0, u0, 0.1);
    let r = price_double_barrier(&p, BpConfig::default(), &[1.0, 2.0, 1.5]).unwrap();
    assert!(r.price[0].abs() <= 2e-3 && r.price[1].abs() <= 2e-3, "{:?}", r.price);
    assert!(r.price[2] > 0.0);
    assert!(r.solution.residual <= 1e-10);
}

#[test]
fn mirror_symmetric_strip() {
    // far from the origin the drift b/z is negligible and the problem is
    // symmetric about the midpoint
    let (y, h) = (100.0, 102.0);
    let u0 = InitialProfile::power(vec![(-y * h, 0.0), (y + h, 1.0), (-1.0, 2.0)], y, h);
    let p = strip(0.5, y, h, u0, 0.5);
    let sol = BpPricer::new(&p, BpConfig::default()).unwrap().solve(&p.u0).unwrap();
    let phi = sol.phi.unwrap();
    let scale = sol.psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in sol.psi.iter().zip(&phi) {
        assert!((a.abs() - b.abs()).abs() <= 0.02 * scale, "{a} {b}");
    }
}

#[test]
fn shared_kernel_many_profiles() {
    let m = table_model();
    let p = cev_to_bessel(&m, &up(100.0), 59.0, 0.5).unwrap();
    let pricer = BpPricer::new(&p, BpConfig::default()).unwrap();
    let z = (p.back.to_z)(70.0);
    let profiles: Vec<InitialProfile> = [59.0, 64.0, 69.0]
        .iter()
        .map(|&k| cev_to_bessel(&m, &up(100.0), k, 0.5).unwrap().u0)
        .collect();
    let many = pricer.solve_many(&profiles).unwrap();
    for (u0, sol) in profiles.iter().zip(&many) {
        let a = pricer.evaluate(sol, u0, &[z]).unwrap().price[0];
        let b = pricer.price_points(u0, &[z]).unwrap().price[0];
        assert!((a - b).abs() < 1e-12);
    }
}
