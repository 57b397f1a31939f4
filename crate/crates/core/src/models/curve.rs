use crate::error::{invalid, Result};

/// Deterministic function of calendar time.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeCurve {
    /// Constant value.
    Constant(f64),
    /// `level + slope * (offset + t)`.
    Linear { level: f64, slope: f64, offset: f64 },
    /// `scale * sqrt(offset + t)`.
    SqrtAffine { scale: f64, offset: f64 },
    /// Linear interpolation between samples, flat outside.
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl TimeCurve {
    pub fn constant(v: f64) -> Self {
        TimeCurve::Constant(v)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TimeCurve::Constant(v) if !v.is_finite() => Err(invalid("constant curve value is not finite")),
            TimeCurve::Linear { level, slope, offset }
                if !(level.is_finite() && slope.is_finite() && offset.is_finite()) =>
            {
                Err(invalid("linear curve has non-finite coefficients"))
            }
            TimeCurve::SqrtAffine { scale, offset } if !(scale.is_finite() && offset.is_finite()) => {
                Err(invalid("sqrt-affine curve has non-finite coefficients"))
            }
            TimeCurve::PiecewiseLinear { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(invalid("piecewise curve needs matching, non-empty times and values"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("piecewise curve times must be strictly increasing"));
                }
                if values.iter().chain(times).any(|v| !v.is_finite()) {
                    return Err(invalid("piecewise curve contains non-finite entries"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeCurve::Constant(v) => *v,
            TimeCurve::Linear { level, slope, offset } => level + slope * (offset + t),
            TimeCurve::SqrtAffine { scale, offset } => scale * (offset + t).max(0.0).sqrt(),
            TimeCurve::PiecewiseLinear { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                let n = times.len();
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Time derivative, zero on flat pieces.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeCurve::Constant(_) => 0.0,
            TimeCurve::Linear { slope, .. } => *slope,
            TimeCurve::SqrtAffine { scale, offset } => 0.5 * scale / (offset + t).sqrt(),
            TimeCurve::PiecewiseLinear { times, values } => {
                let n = times.len();
                if t < times[0] || t >= times[n - 1] || n == 1 {
                    return 0.0;
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                (values[k + 1] - values[k]) / (times[k + 1] - times[k])
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeCurve::Constant(_) => true,
            TimeCurve::Linear { slope, .. } => *slope == 0.0,
            TimeCurve::SqrtAffine { scale, .. } => *scale == 0.0,
            TimeCurve::PiecewiseLinear { values, .. } => values.iter().all(|v| *v == values[0]),
        }
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeCurve::Constant(v) => v * (b - a),
            TimeCurve::Linear { level, slope, offset } => {
                level * (b - a) + 0.5 * slope * ((offset + b).powi(2) - (offset + a).powi(2))
            }
            TimeCurve::SqrtAffine { scale, offset } => {
                2.0 / 3.0 * scale * ((offset + b).max(0.0).powf(1.5) - (offset + a).max(0.0).powf(1.5))
            }
            TimeCurve::PiecewiseLinear { .. } => self.piecewise_integral(a, b, false),
        }
    }

    /// Exact integral of the square over `[a, b]`.
    pub fn integral_of_square(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeCurve::Constant(v) => v * v * (b - a),
            TimeCurve::Linear { level, slope, offset } => {
                let f = |t: f64| {
                    let u = level + slope * (offset + t);
                    if *slope == 0.0 {
                        u * u * t
                    } else {
                        u.powi(3) / (3.0 * slope)
                    }
                };
                f(b) - f(a)
            }
            TimeCurve::SqrtAffine { scale, offset } => {
                scale * scale * ((b - a) * offset + 0.5 * (b * b - a * a))
            }
            TimeCurve::PiecewiseLinear { .. } => self.piecewise_integral(a, b, true),
        }
    }

    fn piecewise_integral(&self, a: f64, b: f64, square: bool) -> f64 {
        if b < a {
            return -self.piecewise_integral(b, a, square);
        }
        let TimeCurve::PiecewiseLinear { times, .. } = self else { unreachable!() };
        let mut pts = vec![a];
        pts.extend(times.iter().copied().filter(|&s| s > a && s < b));
        pts.push(b);
        let mut s = 0.0;
        for w in pts.windows(2) {
            let (u, v) = (self.value(w[0]), self.value(w[1]));
            let h = w[1] - w[0];
            s += if square { h * (u * u + u * v + v * v) / 3.0 } else { 0.5 * h * (u + v) };
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson_adaptive;

    #[test]
    fn integrals_match_quadrature() {
        let curves = vec![
            TimeCurve::Constant(0.3),
            TimeCurve::Linear { level: 0.01, slope: -0.01, offset: 1.0 },
            TimeCurve::SqrtAffine { scale: 0.3, offset: 1.0 },
            TimeCurve::PiecewiseLinear { times: vec![0.0, 0.4, 1.1], values: vec![0.2, 0.5, 0.1] },
        ];
        for c in &curves {
            let q = simpson_adaptive(&|t| c.value(t), 0.1, 0.9, 1e-13);
            assert!((c.integral(0.1, 0.9) - q).abs() < 1e-11);
            let q2 = simpson_adaptive(&|t| c.value(t).powi(2), 0.1, 0.9, 1e-13);
            assert!((c.integral_of_square(0.1, 0.9) - q2).abs() < 1e-11);
        }
    }
}
