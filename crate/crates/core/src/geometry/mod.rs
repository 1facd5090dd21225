//! Time-dependent domains, their distance functions, reflection direction
//! fields, mollified distance, and an empirical verifier for the geometric
//! assumptions the solvers rely on.

mod field;
mod mollify;
mod polygon;
mod verify;

pub use field::{GammaJet, ReflectionField};
pub use mollify::{kernel_moment, MollifiedDistance, Mollifier};
pub use polygon::ConvexPolygon;
pub(crate) use verify::subject_name;
pub use verify::{verify_assumptions, VerifyBudget};

use crate::error::{Error, Result};
use crate::motion::Motion;
use crate::vecn;
use serde::{Deserialize, Serialize};

/// Number of time nodes used to certify sampled construction invariants
/// (positive width, positive scale) over the horizon.
const VALIDATION_NODES: usize = 2049;

/// Floor on section width / radius / scale, below which construction fails.
const MIN_EXTENT: f64 = 1e-9;

/// Shape of the moving time sections.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Ω_t = (left(t), right(t)) ⊂ ℝ.
    MovingInterval { left: Motion, right: Motion },
    /// Ω_t = open disk of radius `radius(t)` about `center(t)` ⊂ ℝ².
    MovingDisk { center: [Motion; 2], radius: Motion },
    /// Ω_t = center(t) + scale(t)·base, a rigid translation and dilation of
    /// a fixed convex polygon (non-smooth corners).
    MovingScaledPolygon {
        center: [Motion; 2],
        scale: Motion,
        base: ConvexPolygon,
    },
}

/// The cone/regularity constants a domain–field pair is certified against:
/// cone opening `rho`, obliqueness bound `theta` for boundary–interior
/// pairs within radius `delta`, and the temporal Hölder-½ constant
/// `holder_k` of the distance function.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConeCertificate {
    pub rho: f64,
    pub theta: f64,
    pub delta: f64,
    pub holder_k: f64,
}

impl ConeCertificate {
    pub fn new(rho: f64, theta: f64, delta: f64, holder_k: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid("cone opening rho must lie in (0,1)"));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid("obliqueness theta must lie in (0,1)"));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid("locality radius delta must be positive"));
        }
        if !holder_k.is_finite() || holder_k <= 0.0 {
            return Err(Error::invalid("temporal constant must be positive"));
        }
        Ok(ConeCertificate {
            rho,
            theta,
            delta,
            holder_k,
        })
    }

    /// Compatibility margin θ² − (1 − ρ²); the obliqueness constant is
    /// admissible for the cone opening when this is positive.
    pub fn obliqueness_margin(&self) -> f64 {
        self.theta * self.theta - (1.0 - self.rho * self.rho)
    }
}

/// A time-dependent domain: a family of bounded convex open sections Ω_t
/// swept over a finite horizon, with exact distance evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "DomainData", into = "DomainData")]
pub struct DomainSpec {
    horizon: f64,
    shape: Shape,
    /// Smallest inradius of any section over the horizon (sampled).
    min_inradius: f64,
    /// Axis-aligned box containing every section over the horizon (sampled).
    global_lo: Vec<f64>,
    global_hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DomainData {
    horizon: f64,
    shape: Shape,
}

impl TryFrom<DomainData> for DomainSpec {
    type Error = Error;
    fn try_from(d: DomainData) -> Result<Self> {
        DomainSpec::new(d.horizon, d.shape)
    }
}

impl From<DomainSpec> for DomainData {
    fn from(d: DomainSpec) -> Self {
        DomainData {
            horizon: d.horizon,
            shape: d.shape,
        }
    }
}

impl DomainSpec {
    pub fn new(horizon: f64, shape: Shape) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon must be positive and finite"));
        }
        let dim = match shape {
            Shape::MovingInterval { .. } => 1,
            _ => 2,
        };
        let mut spec = DomainSpec {
            horizon,
            shape,
            min_inradius: f64::INFINITY,
            global_lo: vec![f64::INFINITY; dim],
            global_hi: vec![f64::NEG_INFINITY; dim],
        };
        for k in 0..VALIDATION_NODES {
            let t = horizon * k as f64 / (VALIDATION_NODES - 1) as f64;
            let r = spec.inradius_at(t)?;
            if !r.is_finite() || r <= MIN_EXTENT {
                return Err(Error::invalid(format!(
                    "domain section at t = {t} degenerates (inradius {r:.3e})"
                )));
            }
            spec.min_inradius = spec.min_inradius.min(r);
            let (lo, hi) = spec.bounding_box_unchecked(t);
            for a in 0..dim {
                spec.global_lo[a] = spec.global_lo[a].min(lo[a]);
                spec.global_hi[a] = spec.global_hi[a].max(hi[a]);
            }
        }
        Ok(spec)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::MovingInterval { .. } => 1,
            _ => 2,
        }
    }

    /// Interval endpoints accessor for the 1D mapped-coordinate solvers.
    pub fn as_interval(&self) -> Option<(&Motion, &Motion)> {
        match &self.shape {
            Shape::MovingInterval { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// Smallest sampled section inradius over the horizon.
    pub fn min_inradius(&self) -> f64 {
        self.min_inradius
    }

    /// Mollification width small enough that the 3β-tube around any section
    /// boundary stays clear of the section's deep interior.
    pub fn suggested_mollifier_width(&self) -> f64 {
        self.min_inradius / 10.0
    }

    /// Box containing every section over the whole horizon.
    pub fn global_bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.global_lo.clone(), self.global_hi.clone())
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.horizon);
        if !t.is_finite() || t < -slack || t > self.horizon + slack {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn clamp_time(&self, t: f64) -> f64 {
        t.clamp(0.0, self.horizon)
    }

    fn inradius_at(&self, t: f64) -> Result<f64> {
        Ok(match &self.shape {
            Shape::MovingInterval { left, right } => (right.value(t) - left.value(t)) / 2.0,
            Shape::MovingDisk { radius, .. } => radius.value(t),
            Shape::MovingScaledPolygon { scale, base, .. } => {
                scale.value(t) * base.origin_inradius()
            }
        })
    }

    fn bounding_box_unchecked(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::MovingInterval { left, right } => {
                let a = left.value(t);
                let b = right.value(t);
                (vec![a], vec![b])
            }
            Shape::MovingDisk { center, radius } => {
                let c = [center[0].value(t), center[1].value(t)];
                let r = radius.value(t);
                (vec![c[0] - r, c[1] - r], vec![c[0] + r, c[1] + r])
            }
            Shape::MovingScaledPolygon {
                center,
                scale,
                base,
            } => {
                let c = [center[0].value(t), center[1].value(t)];
                let s = scale.value(t);
                let (lo, hi) = base.bounding_box();
                (
                    vec![c[0] + s * lo[0], c[1] + s * lo[1]],
                    vec![c[0] + s * hi[0], c[1] + s * hi[1]],
                )
            }
        }
    }

    /// Box containing the section at `t`.
    pub fn bounding_box(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_time(t)?;
        Ok(self.bounding_box_unchecked(self.clamp_time(t)))
    }

    /// Signed Euclidean distance from `x` to the section at `t`: negative
    /// inside Ω_t, zero on ∂Ω_t, positive outside. Exact closed forms.
    pub fn signed_distance(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        let t = self.clamp_time(t);
        self.expect_dim(x)?;
        Ok(match &self.shape {
            Shape::MovingInterval { left, right } => {
                let a = left.value(t);
                let b = right.value(t);
                (a - x[0]).max(x[0] - b)
            }
            Shape::MovingDisk { center, radius } => {
                let c = [center[0].value(t), center[1].value(t)];
                vecn::dist(x, &c) - radius.value(t)
            }
            Shape::MovingScaledPolygon {
                center,
                scale,
                base,
            } => {
                let c = [center[0].value(t), center[1].value(t)];
                let s = scale.value(t);
                let z = [(x[0] - c[0]) / s, (x[1] - c[1]) / s];
                s * base.signed_distance(z)
            }
        })
    }

    /// Euclidean distance from `x` to the closed section: 0 iff x ∈ Ω̄_t.
    pub fn distance(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.signed_distance(t, x)?.max(0.0))
    }

    /// Unit gradient of the signed distance at `x` (the outward direction of
    /// the nearest boundary feature). Piecewise smooth; on ridge sets an
    /// arbitrary nearest feature is chosen.
    pub fn signed_distance_gradient(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let t = self.clamp_time(t);
        self.expect_dim(x)?;
        Ok(match &self.shape {
            Shape::MovingInterval { left, right } => {
                let a = left.value(t);
                let b = right.value(t);
                // Nearer endpoint decides the sign; ties pick the left wall.
                if a - x[0] >= x[0] - b {
                    vec![-1.0]
                } else {
                    vec![1.0]
                }
            }
            Shape::MovingDisk { center, .. } => {
                let c = [center[0].value(t), center[1].value(t)];
                let mut g = vec![x[0] - c[0], x[1] - c[1]];
                let r = vecn::norm(&g);
                if r < 1e-12 {
                    // Center of the disk: every direction is nearest.
                    return Ok(vec![1.0, 0.0]);
                }
                g[0] /= r;
                g[1] /= r;
                g
            }
            Shape::MovingScaledPolygon {
                center,
                scale,
                base,
            } => {
                let c = [center[0].value(t), center[1].value(t)];
                let s = scale.value(t);
                let z = [(x[0] - c[0]) / s, (x[1] - c[1]) / s];
                base.signed_distance_gradient(z).to_vec()
            }
        })
    }

    pub fn contains(&self, t: f64, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.signed_distance(t, x)? <= tol)
    }

    /// A point well inside the section (interval midpoint / disk or polygon
    /// center).
    pub fn interior_anchor(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let t = self.clamp_time(t);
        Ok(match &self.shape {
            Shape::MovingInterval { left, right } => {
                vec![(left.value(t) + right.value(t)) / 2.0]
            }
            Shape::MovingDisk { center, .. } | Shape::MovingScaledPolygon { center, .. } => {
                vec![center[0].value(t), center[1].value(t)]
            }
        })
    }

    /// Boundary point at parameter `u ∈ [0,1)`: the two endpoints for an
    /// interval (u < ½ picks the left one), arc-length otherwise.
    pub fn boundary_point(&self, t: f64, u: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let t = self.clamp_time(t);
        Ok(match &self.shape {
            Shape::MovingInterval { left, right } => {
                if u.rem_euclid(1.0) < 0.5 {
                    vec![left.value(t)]
                } else {
                    vec![right.value(t)]
                }
            }
            Shape::MovingDisk { center, radius } => {
                let c = [center[0].value(t), center[1].value(t)];
                let r = radius.value(t);
                let a = std::f64::consts::TAU * u.rem_euclid(1.0);
                vec![c[0] + r * a.cos(), c[1] + r * a.sin()]
            }
            Shape::MovingScaledPolygon {
                center,
                scale,
                base,
            } => {
                let c = [center[0].value(t), center[1].value(t)];
                let s = scale.value(t);
                let p = base.boundary_point(u);
                vec![c[0] + s * p[0], c[1] + s * p[1]]
            }
        })
    }

    fn expect_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sliding_interval() -> DomainSpec {
        // Ω_t = (t, t+2)
        DomainSpec::new(
            1.0,
            Shape::MovingInterval {
                left: Motion::Linear {
                    value0: 0.0,
                    rate: 1.0,
                },
                right: Motion::Linear {
                    value0: 2.0,
                    rate: 1.0,
                },
            },
        )
        .unwrap()
    }

    fn shrinking_disk() -> DomainSpec {
        // radius 1 − t/4 about the origin
        DomainSpec::new(
            1.0,
            Shape::MovingDisk {
                center: [Motion::constant(0.0), Motion::constant(0.0)],
                radius: Motion::Linear {
                    value0: 1.0,
                    rate: -0.25,
                },
            },
        )
        .unwrap()
    }

    #[test]
    fn interval_distances_match_endpoints() {
        let d = sliding_interval();
        // 1.7 ∈ [0.5, 2.5]
        assert_eq!(d.distance(0.5, &[1.7]).unwrap(), 0.0);
        // 0.3 below the left endpoint 0.5
        assert!((d.distance(0.5, &[0.2]).unwrap() - 0.3).abs() < 1e-15);
        assert!((d.signed_distance(0.5, &[1.0]).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn disk_distance_matches_radius_motion() {
        let d = shrinking_disk();
        // 1.5 − r(1) = 1.5 − 0.75
        assert!((d.distance(1.0, &[1.5, 0.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(d.contains(1.0, &[0.5, 0.5], 0.0).unwrap());
    }

    #[test]
    fn scaled_polygon_distance_scales() {
        let d = DomainSpec::new(
            1.0,
            Shape::MovingScaledPolygon {
                center: [Motion::constant(1.0), Motion::constant(1.0)],
                scale: Motion::constant(0.5),
                base: ConvexPolygon::unit_square(),
            },
        )
        .unwrap();
        // world section is the square [0.5, 1.5]²
        assert!((d.distance(0.3, &[1.8, 1.0]).unwrap() - 0.3).abs() < 1e-15);
        assert!((d.signed_distance(0.3, &[1.0, 1.0]).unwrap() + 0.5).abs() < 1e-15);
        let g = d.signed_distance_gradient(0.3, &[1.8, 1.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn time_domain_is_enforced() {
        let d = sliding_interval();
        assert!(matches!(
            d.distance(1.5, &[0.0]),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(d.distance(1.0 + 1e-13, &[0.0]).is_ok());
        assert!(matches!(
            d.distance(0.5, &[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_sections_are_rejected() {
        // width hits zero at t = 0.5
        let bad = DomainSpec::new(
            1.0,
            Shape::MovingInterval {
                left: Motion::constant(0.0),
                right: Motion::Linear {
                    value0: 1.0,
                    rate: -2.0,
                },
            },
        );
        assert!(bad.is_err());
    }

    #[test]
    fn boundary_points_sit_on_the_boundary() {
        let disk = shrinking_disk();
        for k in 0..32 {
            let p = disk.boundary_point(0.7, k as f64 / 32.0).unwrap();
            assert!(disk.signed_distance(0.7, &p).unwrap().abs() < 1e-12);
        }
        let iv = sliding_interval();
        assert_eq!(iv.boundary_point(0.5, 0.25).unwrap(), vec![0.5]);
        assert_eq!(iv.boundary_point(0.5, 0.75).unwrap(), vec![2.5]);
    }

    #[test]
    fn metadata_reflects_motion() {
        let d = shrinking_disk();
        assert!((d.min_inradius() - 0.75).abs() < 1e-9);
        let (lo, hi) = d.global_bounding_box();
        assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 1.0).abs() < 1e-12);
        let iv = sliding_interval();
        assert!((iv.min_inradius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_lipschitz_spot_check() {
        let d = shrinking_disk();
        let mut worst: f64 = 0.0;
        for i in 0..2000 {
            let u = crate::rng::uniform(7, i, 0, 0) * 4.0 - 2.0;
            let v = crate::rng::uniform(7, i, 0, 1) * 4.0 - 2.0;
            let p = crate::rng::uniform(7, i, 1, 0) * 4.0 - 2.0;
            let q = crate::rng::uniform(7, i, 1, 1) * 4.0 - 2.0;
            let t = crate::rng::uniform(7, i, 2, 0);
            let dx = vecn::dist(&[u, v], &[p, q]);
            let dd = (d.distance(t, &[u, v]).unwrap() - d.distance(t, &[p, q]).unwrap()).abs();
            worst = worst.max(dd - dx);
        }
        assert!(worst <= 1e-12, "worst violation {worst}");
    }
}
