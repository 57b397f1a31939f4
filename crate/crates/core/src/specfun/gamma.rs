use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Taylor coefficients of 1/Gamma(z) about 0 (coefficient of z^k at index k).
const RGAMMA_TAYLOR: [f64; 28] = [
    0.0,
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
];

/// Gamma function for real arguments.  Poles return `NaN`.
pub fn gamma_fn(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x == x.floor() && x <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_fn(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x < 3.0 {
        // 1/Gamma(1+t) via its Taylor series, then shift.
        let mut t = x - 1.0;
        let mut scale = 1.0;
        while t > 0.5 {
            t -= 1.0;
            scale *= t + 1.0;
        }
        return scale / rgamma1p(t);
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let pw = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * pw * (pw * (-t).exp()) * a
}

/// Natural log of |Gamma(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    if x < 20.0 {
        return gamma_fn(x).abs().ln();
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// 1/Gamma(1+x) for |x| <= 1/2 from the Taylor series.
pub(crate) fn rgamma1p(x: f64) -> f64 {
    let mut s = 0.0;
    for k in (1..RGAMMA_TAYLOR.len()).rev() {
        s = s * x + RGAMMA_TAYLOR[k];
    }
    s
}

/// Temme's auxiliary functions for |mu| <= 1/2:
/// (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)).
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // gam1 = -(c2 + c4 mu^2 + ...), gam2 = c1 + c3 mu^2 + ...
    let mut g1 = 0.0;
    let mut k = RGAMMA_TAYLOR.len() - 1;
    if k % 2 == 1 {
        k -= 1;
    }
    while k >= 2 {
        g1 = g1 * mu2 + RGAMMA_TAYLOR[k];
        k -= 2;
    }
    let mut g2 = 0.0;
    let mut k = RGAMMA_TAYLOR.len() - 1;
    if k % 2 == 0 {
        k -= 1;
    }
    loop {
        g2 = g2 * mu2 + RGAMMA_TAYLOR[k];
        if k == 1 {
            break;
        }
        k -= 2;
    }
    let gam1 = -g1;
    let gam2 = g2;
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}
