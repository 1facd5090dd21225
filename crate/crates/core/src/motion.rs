//! Scalar motion laws for moving-domain parameters.
//!
//! Boundary endpoints, centers, radii and scales are driven by `Motion`
//! values: scalar functions of time with exact derivatives. Closed forms
//! cover the shipped cases (constant, linear, sinusoid, square-root ramp)
//! and a cubic Hermite spline table covers tabulated motions. The square
//! root ramp is deliberately Hölder-1/2 at `t = 0` (its derivative is
//! unbounded there); it is the borderline temporal regularity the
//! geometry layer's Hölder fit is designed to detect.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Time at which the sqrt ramp's one-sided derivative is reported when
/// asked for the (unbounded) derivative at exactly `t = 0`.
const SQRT_RATE_FLOOR: f64 = 1e-12;

/// A scalar function of time with an exact derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Motion {
    /// `value`
    Constant { value: f64 },
    /// `value0 + rate · t`
    Linear { value0: f64, rate: f64 },
    /// `offset + amplitude · sin(angular_frequency · t + phase)`
    Sinusoid {
        offset: f64,
        amplitude: f64,
        angular_frequency: f64,
        phase: f64,
    },
    /// `value0 + scale · √t` — Hölder-1/2 at the origin, not Lipschitz.
    SqrtRamp { value0: f64, scale: f64 },
    /// Cubic Hermite spline through a knot table.
    Spline {
        knots: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
    /// Time reversal of another motion over a fixed horizon:
    /// `value(t) = inner(horizon − t)`.
    Reversed { inner: Box<Motion>, horizon: f64 },
}

impl Motion {
    /// Convenience constructor: constant motion.
    pub fn constant(value: f64) -> Self {
        Motion::Constant { value }
    }

    /// Spline through `(knots, values)` with centered-difference slopes
    /// (one-sided at the ends). Reproduces polynomials up to degree two.
    pub fn spline_from_samples(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                got: values.len(),
            });
        }
        if knots.len() < 2 {
            return Err(Error::invalid("spline needs at least two knots"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        let n = knots.len();
        let mut slopes = vec![0.0; n];
        for i in 0..n {
            slopes[i] = if i == 0 {
                (values[1] - values[0]) / (knots[1] - knots[0])
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2])
            } else {
                (values[i + 1] - values[i - 1]) / (knots[i + 1] - knots[i - 1])
            };
        }
        Ok(Motion::Spline {
            knots,
            values,
            slopes,
        })
    }

    /// Wrap this motion so time runs backwards over `[0, horizon]`.
    pub fn reversed(self, horizon: f64) -> Self {
        Motion::Reversed {
            inner: Box::new(self),
            horizon,
        }
    }

    /// Value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Motion::Constant { value } => *value,
            Motion::Linear { value0, rate } => value0 + rate * t,
            Motion::Sinusoid {
                offset,
                amplitude,
                angular_frequency,
                phase,
            } => offset + amplitude * (angular_frequency * t + phase).sin(),
            Motion::SqrtRamp { value0, scale } => value0 + scale * t.max(0.0).sqrt(),
            Motion::Spline {
                knots,
                values,
                slopes,
            } => hermite_eval(knots, values, slopes, t).0,
            Motion::Reversed { inner, horizon } => inner.value(horizon - t),
        }
    }

    /// Time derivative at `t`. Exact for every variant; the sqrt ramp
    /// reports its one-sided value at a floored time near the origin.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Motion::Constant { .. } => 0.0,
            Motion::Linear { rate, .. } => *rate,
            Motion::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
                ..
            } => amplitude * angular_frequency * (angular_frequency * t + phase).cos(),
            Motion::SqrtRamp { scale, .. } => 0.5 * scale / t.max(SQRT_RATE_FLOOR).sqrt(),
            Motion::Spline {
                knots,
                values,
                slopes,
            } => hermite_eval(knots, values, slopes, t).1,
            Motion::Reversed { inner, horizon } => -inner.rate(horizon - t),
        }
    }
}

/// Evaluate a cubic Hermite spline (value, derivative). Beyond the knot
/// span the spline continues linearly with the end slope, so the motion
/// keeps a bounded derivative globally.
fn hermite_eval(knots: &[f64], values: &[f64], slopes: &[f64], t: f64) -> (f64, f64) {
    let n = knots.len();
    if t <= knots[0] {
        return (values[0] + slopes[0] * (t - knots[0]), slopes[0]);
    }
    if t >= knots[n - 1] {
        return (
            values[n - 1] + slopes[n - 1] * (t - knots[n - 1]),
            slopes[n - 1],
        );
    }
    let seg = match knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    let h = knots[seg + 1] - knots[seg];
    let s = (t - knots[seg]) / h;
    let (v0, v1) = (values[seg], values[seg + 1]);
    let (m0, m1) = (slopes[seg] * h, slopes[seg + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let value = (2.0 * s3 - 3.0 * s2 + 1.0) * v0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * v1
        + (s3 - s2) * m1;
    let dv_ds = (6.0 * s2 - 6.0 * s) * v0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * v1
        + (3.0 * s2 - 2.0 * s) * m1;
    (value, dv_ds / h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_have_exact_rates() {
        let m = Motion::Linear {
            value0: 1.0,
            rate: -0.5,
        };
        assert_eq!(m.value(2.0), 0.0);
        assert_eq!(m.rate(17.0), -0.5);

        let s = Motion::Sinusoid {
            offset: 0.0,
            amplitude: 1.0,
            angular_frequency: 1.0,
            phase: 0.0,
        };
        assert!((s.value(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!(s.rate(std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((s.rate(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_ramp_is_holder_half_not_lipschitz() {
        let m = Motion::SqrtRamp {
            value0: 0.0,
            scale: 0.3,
        };
        assert!((m.value(0.25) - 0.15).abs() < 1e-15);
        // |m(t) − m(0)| / √t is constant — the Hölder-1/2 signature.
        for &t in &[1e-6, 1e-4, 1e-2, 1.0] {
            let ratio = (m.value(t) - m.value(0.0)) / t.sqrt();
            assert!((ratio - 0.3).abs() < 1e-12);
        }
        // ... while the difference quotient blows up near zero.
        assert!((m.value(1e-8) - m.value(0.0)) / 1e-8 > 1e3);
    }

    #[test]
    fn spline_reproduces_quadratics() {
        let knots: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = knots.iter().map(|&t| 1.0 + 2.0 * t - 3.0 * t * t).collect();
        let m = Motion::spline_from_samples(knots, values).unwrap();
        // Centered-difference slopes are exact for quadratics at interior
        // knots, so interior segments reproduce the polynomial exactly.
        for &t in &[0.15, 0.5, 0.93, 1.4, 1.85] {
            let exact = 1.0 + 2.0 * t - 3.0 * t * t;
            let exact_rate = 2.0 - 6.0 * t;
            assert!((m.value(t) - exact).abs() < 1e-12, "value at {t}");
            assert!((m.rate(t) - exact_rate).abs() < 1e-10, "rate at {t}");
        }
    }

    #[test]
    fn spline_tracks_smooth_motion() {
        let knots: Vec<f64> = (0..=100).map(|i| i as f64 * 0.02).collect();
        let values: Vec<f64> = knots.iter().map(|&t| t.sin()).collect();
        let m = Motion::spline_from_samples(knots, values).unwrap();
        for &t in &[0.11, 0.77, 1.23, 1.9] {
            assert!((m.value(t) - t.sin()).abs() < 1e-5);
            assert!((m.rate(t) - t.cos()).abs() < 1e-3);
        }
    }

    #[test]
    fn reversal_flips_value_and_rate() {
        let m = Motion::Linear {
            value0: 0.0,
            rate: 2.0,
        }
        .reversed(1.0);
        assert!((m.value(0.0) - 2.0).abs() < 1e-15);
        assert!((m.value(1.0) - 0.0).abs() < 1e-15);
        assert!((m.rate(0.3) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn spline_rejects_bad_tables() {
        assert!(Motion::spline_from_samples(vec![0.0, 0.0, 1.0], vec![0.0; 3]).is_err());
        assert!(Motion::spline_from_samples(vec![0.0, 1.0], vec![0.0; 3]).is_err());
        assert!(Motion::spline_from_samples(vec![0.0], vec![0.0]).is_err());
    }
}
