//! Mollified distance: spatial convolution of d and d² with a compactly
//! supported polynomial bump, evaluated by fixed-order tensor quadrature.

use super::DomainSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights of order 8 on [−1, 1]; exact for
/// polynomial integrands of degree ≤ 15, which covers the degree-6 kernel
/// times locally quadratic distance data with room to spare.
const GL8_NODES: [f64; 8] = [
    -9.602_898_564_975_362e-1,
    -7.966_664_774_136_267e-1,
    -5.255_324_099_163_29e-1,
    -1.834_346_424_956_497_8e-1,
    1.834_346_424_956_497_8e-1,
    5.255_324_099_163_29e-1,
    7.966_664_774_136_267e-1,
    9.602_898_564_975_362e-1,
];
const GL8_WEIGHTS: [f64; 8] = [
    1.012_285_362_903_766_9e-1,
    2.223_810_344_533_743_4e-1,
    3.137_066_458_778_870_5e-1,
    3.626_837_833_783_617_7e-1,
    3.626_837_833_783_617_7e-1,
    3.137_066_458_778_870_5e-1,
    2.223_810_344_533_743_4e-1,
    1.012_285_362_903_766_9e-1,
];

/// One-dimensional bump kernel (35/32)(1 − z²)³ on [−1, 1]: unit mass,
/// second moment 1/9, fourth moment 1/33.
fn kernel(z: f64) -> f64 {
    let w = 1.0 - z * z;
    (35.0 / 32.0) * w * w * w
}

/// Derivative of the bump kernel: −(105/16)·z·(1 − z²)².
fn kernel_prime(z: f64) -> f64 {
    let w = 1.0 - z * z;
    -(105.0 / 16.0) * z * w * w
}

/// Quadrature value of ∫ z^p k(z) dz — exposed so tests can pin the
/// quadrature against exact rational moments.
pub fn kernel_moment(p: u32) -> f64 {
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GL8_WEIGHTS[i] * GL8_NODES[i].powi(p as i32) * kernel(GL8_NODES[i]);
    }
    acc
}

/// Mollified distance data at one point: `d_smooth = d ∗ φ_β`,
/// `v_smooth = d² ∗ φ_β`, and the spatial gradient of `v_smooth` computed
/// through the kernel (no derivative of the distance is ever taken).
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedDistance {
    pub d_smooth: f64,
    pub v_smooth: f64,
    pub grad_v: Vec<f64>,
}

/// Spatial mollification of the distance function with a fixed width β.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Mollifier {
    width: f64,
}

impl Mollifier {
    pub fn new(width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::invalid("mollifier width must be positive"));
        }
        Ok(Mollifier { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Evaluate d ∗ φ_β, d² ∗ φ_β and ∇(d² ∗ φ_β) at `(t, x)`.
    ///
    /// The kernel is a tensor product of one-dimensional bumps with per-axis
    /// half-width β/√n, so its support sits inside the Euclidean ball of
    /// radius β and the Lipschitz bias bound |d_β − d| ≤ β is exact.
    pub fn mollified_distance(
        &self,
        domain: &DomainSpec,
        t: f64,
        x: &[f64],
    ) -> Result<MollifiedDistance> {
        domain.check_time(t)?;
        let n = domain.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let h = self.width / (n as f64).sqrt();
        let mut d_smooth = 0.0;
        let mut v_smooth = 0.0;
        let mut grad_v = vec![0.0; n];
        match n {
            1 => {
                for i in 0..8 {
                    let z = GL8_NODES[i];
                    let d = domain.distance(t, &[x[0] - h * z])?;
                    let w = GL8_WEIGHTS[i];
                    d_smooth += w * kernel(z) * d;
                    v_smooth += w * kernel(z) * d * d;
                    // ∇(v ∗ φ)(x) = (1/h) ∫ v(x − hz) k′(z) dz
                    grad_v[0] += w * kernel_prime(z) * d * d / h;
                }
            }
            2 => {
                for i in 0..8 {
                    let zi = GL8_NODES[i];
                    for j in 0..8 {
                        let zj = GL8_NODES[j];
                        let y = [x[0] - h * zi, x[1] - h * zj];
                        let d = domain.distance(t, &y)?;
                        let w = GL8_WEIGHTS[i] * GL8_WEIGHTS[j];
                        let kk = kernel(zi) * kernel(zj);
                        d_smooth += w * kk * d;
                        v_smooth += w * kk * d * d;
                        grad_v[0] += w * kernel_prime(zi) * kernel(zj) * d * d / h;
                        grad_v[1] += w * kernel(zi) * kernel_prime(zj) * d * d / h;
                    }
                }
            }
            _ => {
                return Err(Error::Unsupported(
                    "mollified distance covers one- and two-dimensional sections".into(),
                ))
            }
        }
        Ok(MollifiedDistance {
            d_smooth,
            v_smooth,
            grad_v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::motion::Motion;

    fn static_interval() -> DomainSpec {
        DomainSpec::new(
            1.0,
            Shape::MovingInterval {
                left: Motion::constant(0.0),
                right: Motion::constant(2.0),
            },
        )
        .unwrap()
    }

    fn unit_disk() -> DomainSpec {
        DomainSpec::new(
            1.0,
            Shape::MovingDisk {
                center: [Motion::constant(0.0), Motion::constant(0.0)],
                radius: Motion::constant(1.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn kernel_moments_are_exact_rationals() {
        assert!((kernel_moment(0) - 1.0).abs() < 1e-14);
        assert!(kernel_moment(1).abs() < 1e-16);
        assert!((kernel_moment(2) - 1.0 / 9.0).abs() < 1e-15);
        assert!((kernel_moment(4) - 1.0 / 33.0).abs() < 1e-15);
    }

    #[test]
    fn flat_wall_values_are_polynomial_exact() {
        // Outside the interval [0,2] at distance 0.5 from the left wall the
        // distance is linear across the whole stencil, so the symmetric
        // kernel reproduces d exactly, shifts d² by width²·(second moment),
        // and differentiates d² to 2·d·d' = −1 exactly.
        let dom = static_interval();
        let beta = 0.01;
        let m = Mollifier::new(beta).unwrap();
        let out = m.mollified_distance(&dom, 0.3, &[-0.5]).unwrap();
        assert!((out.d_smooth - 0.5).abs() < 1e-12);
        assert!((out.v_smooth - (0.25 + beta * beta / 9.0)).abs() < 1e-12);
        assert!((out.grad_v[0] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn deep_inside_everything_vanishes() {
        let dom = static_interval();
        let m = Mollifier::new(0.05).unwrap();
        let out = m.mollified_distance(&dom, 0.7, &[1.0]).unwrap();
        assert_eq!(out.d_smooth, 0.0);
        assert_eq!(out.v_smooth, 0.0);
        assert_eq!(out.grad_v, vec![0.0]);
    }

    #[test]
    fn smoothing_bias_is_bounded_by_width() {
        // |d_β − d| ≤ β: 1-Lipschitz distance convolved with a unit-mass
        // kernel supported on radius β.
        let dom = unit_disk();
        let beta = 0.07;
        let m = Mollifier::new(beta).unwrap();
        for i in 0..200 {
            let x = [
                crate::rng::uniform(3, i, 0, 0) * 3.0 - 1.5,
                crate::rng::uniform(3, i, 0, 1) * 3.0 - 1.5,
            ];
            let t = crate::rng::uniform(3, i, 1, 0);
            let d = dom.distance(t, &x).unwrap();
            let out = m.mollified_distance(&dom, t, &x).unwrap();
            assert!(
                (out.d_smooth - d).abs() <= beta + 1e-12,
                "bias {} exceeds width at {x:?}",
                (out.d_smooth - d).abs()
            );
            assert!(out.d_smooth >= 0.0 && out.v_smooth >= 0.0);
        }
    }

    #[test]
    fn disk_gradient_tracks_two_d_grad_d() {
        let dom = unit_disk();
        let beta = 1e-3;
        let m = Mollifier::new(beta).unwrap();
        let out = m.mollified_distance(&dom, 0.5, &[1.3, 0.0]).unwrap();
        // ∇(d²) = 2·d·∇d = (0.6, 0) plus O(β²) curvature corrections
        assert!((out.grad_v[0] - 0.6).abs() < 1e-4, "got {}", out.grad_v[0]);
        assert!(out.grad_v[1].abs() < 1e-6);
        assert!((out.d_smooth - 0.3).abs() < beta * 1.5);
        let d2 = 0.3f64 * 0.3;
        assert!(out.v_smooth >= d2 - 3.0 * beta && out.v_smooth <= (0.3 + 2.0 * beta).powi(2));
    }

    #[test]
    fn width_validation() {
        assert!(Mollifier::new(0.0).is_err());
        assert!(Mollifier::new(-1.0).is_err());
        assert!(Mollifier::new(f64::NAN).is_err());
    }
}
