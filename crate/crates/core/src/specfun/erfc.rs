use num_complex::Complex64;

const FACTOR: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Faddeeva function w(z) = exp(-z^2) erfc(-i z).
pub fn faddeeva(z: Complex64) -> Complex64 {
    let xi = z.re;
    let yi = z.im;
    let xabs = xi.abs();
    let yabs = yi.abs();
    let x = xabs / 6.3;
    let y = yabs / 4.4;
    let qrho0 = x * x + y * y;
    let xabsq = xabs * xabs;
    let xquad = xabsq - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;
    let small = qrho0 < 0.085264;
    let (mut u, mut v);
    let (mut u2, mut v2) = (0.0, 0.0);
    if small {
        let qrho = (1.0 - 0.85 * y) * qrho0.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as i64;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let fi = i as f64;
            let xaux = (xsum * xquad - ysum * yquad) / fi;
            ysum = (xsum * yquad + ysum * xquad) / fi;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -FACTOR * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = FACTOR * (xsum * xabs - ysum * yabs);
        let daux = (-xquad).exp();
        u2 = daux * yquad.cos();
        v2 = -daux * yquad.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        let (h, kapn, nu);
        if qrho0 > 1.0 {
            h = 0.0;
            kapn = 0i64;
            let qrho = qrho0.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as i64;
        } else {
            let qrho = (1.0 - y) * (1.0 - qrho0).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as i64;
            nu = (16.0 + 26.0 * qrho).round() as i64;
        }
        let h2 = 2.0 * h;
        let b = h > 0.0;
        let mut qlambda = if b { h2.powi(kapn as i32) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if b && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if h == 0.0 {
            u = FACTOR * rx;
            v = FACTOR * ry;
        } else {
            u = FACTOR * sx;
            v = FACTOR * sy;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }
    if yi < 0.0 {
        if small {
            u2 *= 2.0;
            v2 *= 2.0;
        } else {
            let xq = -xquad;
            let w1 = 2.0 * xq.exp();
            u2 = w1 * yquad.cos();
            v2 = -w1 * yquad.sin();
        }
        u = u2 - u;
        v = v2 - v;
        if xi > 0.0 {
            v = -v;
        }
    } else if xi < 0.0 {
        v = -v;
    }
    Complex64::new(u, v)
}

/// Complementary error function of a complex argument.
pub fn erfc_complex(z: Complex64) -> Complex64 {
    // erfc(z) = exp(-z^2) w(i z)
    let iz = Complex64::new(-z.im, z.re);
    if z.re >= 0.0 {
        (-z * z).exp() * faddeeva(iz)
    } else {
        Complex64::new(2.0, 0.0) - (-z * z).exp() * faddeeva(-iz)
    }
}

/// Scaled form exp(z^2) erfc(z) for Re z >= 0.
pub fn erfcx_complex(z: Complex64) -> Complex64 {
    faddeeva(Complex64::new(-z.im, z.re))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn erf_series(z: Complex64) -> Complex64 {
        let mut term = z;
        let mut s = z;
        let z2 = z * z;
        for n in 1..200 {
            term = term * (-z2) / n as f64;
            let add = term / (2 * n + 1) as f64;
            s += add;
            if add.norm() < 1e-18 {
                break;
            }
        }
        s * FACTOR
    }

    #[test]
    fn matches_taylor_series_near_origin() {
        for &(x, y) in &[(0.1, 0.2), (0.5, -0.7), (-1.2, 0.4), (1.5, 1.5), (-0.3, -2.0), (2.0, 0.0)] {
            let z = Complex64::new(x, y);
            let e = Complex64::new(1.0, 0.0) - erf_series(z);
            let v = erfc_complex(z);
            assert!((v - e).norm() < 1e-13 * e.norm().max(1.0), "z={z} {v} {e}");
        }
    }

    #[test]
    fn real_axis_values() {
        let v = erfc_complex(Complex64::new(1.0, 0.0));
        assert!((v.re - 0.157_299_207_050_285_13).abs() < 1e-15);
        let v = erfc_complex(Complex64::new(5.0, 0.0));
        assert!((v.re / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_region() {
        // exp(z^2) erfc(z) ~ 1/(z sqrt(pi)) (1 - 1/(2z^2) + 3/(4z^4) - 15/(8 z^6))
        let z = Complex64::new(30.0, 12.0);
        let z2 = z * z;
        let one = Complex64::new(1.0, 0.0);
        let z4 = z2 * z2;
        let e = (one - 0.5 / z2 + 0.75 / z4 - 1.875 / (z4 * z2) + 6.5625 / (z4 * z4)) * (FACTOR * 0.5) / z;
        let v = erfcx_complex(z);
        assert!((v - e).norm() < 1e-13 * e.norm(), "{v} {e}");
    }
}
