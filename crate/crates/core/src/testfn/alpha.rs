//! Boundary wedge `α(t,x)`: nonnegative, supported in a declared layer
//! around the moving boundary, with oblique slope `⟨∇α, γ⟩ ≥ 1` at every
//! boundary point. Built per shape from a smooth depth-like level and a
//! compactly supported taper, with the slope constant calibrated against
//! the actual direction field.

use super::profile1d::smoothstep5;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, ReflectionField, Shape};
use serde::{Deserialize, Serialize};

/// Over-provision factor applied to the reciprocal of the worst sampled
/// boundary slope, so verification at different sample points keeps a
/// cushion above the required unit slope.
const SLOPE_MARGIN: f64 = 1.01;

/// Smallest admissible sampled boundary slope of the depth level along the
/// direction field; below this the wedge construction is refused.
const MIN_USABLE_SLOPE: f64 = 1e-3;

/// Time nodes sampled during slope calibration.
const CALIBRATION_TIMES: usize = 48;

/// Boundary points per time node during slope calibration (the exact
/// polygon vertices are always added on top: the slope dips in a corner
/// sliver that a uniform grid can miss).
const CALIBRATION_POINTS: usize = 64;

/// Value, time derivative, gradient, and Hessian (row-major n×n) of α.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaJet {
    pub value: f64,
    pub dt: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl AlphaJet {
    fn zeros(n: usize) -> Self {
        AlphaJet {
            value: 0.0,
            dt: 0.0,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }
}

/// Which profile a 1D wall carries: a taper rising from zero at the wall
/// (direction field enters the domain there) or a ridge peaking at the
/// wall (direction field exits there, so α must decrease inward).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WallProfile {
    RisingTaper,
    WallRidge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Layout {
    /// Disk sections: depth level r(t) − |x − c(t)|.
    RadialDepth,
    /// Polygon sections: soft minimum of the edge depths, shifted so the
    /// level is exact-nonnegative on the closure and its sublevel support
    /// set stays inside the true boundary layer.
    SoftMinDepth { sigma: f64 },
    /// Interval sections: an independent profile per wall.
    Walls {
        lower: WallProfile,
        upper: WallProfile,
    },
}

/// A calibrated boundary wedge for one domain–field pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpec {
    shape: Shape,
    horizon: f64,
    /// Depth of the boundary layer that carries the wedge.
    width: f64,
    /// Multiplier turning the depth level into α.
    gain: f64,
    /// Worst sampled boundary slope of the level along γ (pre-gain).
    calibrated_slope: f64,
    layout: Layout,
}

impl AlphaSpec {
    /// Build the wedge for `domain` and `field`, calibrating the gain so
    /// the sampled boundary slope ⟨∇α, γ⟩ clears 1 with a 1% cushion.
    /// Fails when the field is tangent to (or exits through) part of the
    /// boundary — no wedge of this family can serve there.
    pub fn calibrate(
        domain: &DomainSpec,
        field: &ReflectionField,
        width: Option<f64>,
    ) -> Result<AlphaSpec> {
        let w = width.unwrap_or(0.5 * domain.min_inradius());
        if !w.is_finite() || w <= 0.0 || w > 0.95 * domain.min_inradius() {
            return Err(Error::invalid(format!(
                "layer width must lie in (0, {:.3e}] (0.95 × smallest inradius)",
                0.95 * domain.min_inradius()
            )));
        }
        let layout = match domain.shape() {
            Shape::MovingInterval { .. } => Layout::Walls {
                lower: wall_profile(domain, field, w, true)?,
                upper: wall_profile(domain, field, w, false)?,
            },
            Shape::MovingDisk { .. } => Layout::RadialDepth,
            Shape::MovingScaledPolygon { base, .. } => {
                let m = base.edge_normals().len() as f64;
                Layout::SoftMinDepth {
                    sigma: (0.01 * domain.min_inradius()).min(w / (6.0 * m.ln())),
                }
            }
        };
        let mut spec = AlphaSpec {
            shape: domain.shape().clone(),
            horizon: domain.horizon(),
            width: w,
            gain: 1.0,
            calibrated_slope: 1.0,
            layout,
        };
        let min_slope = spec.min_boundary_slope(domain, field)?;
        if !min_slope.is_finite() || min_slope <= MIN_USABLE_SLOPE {
            return Err(Error::Unsupported(format!(
                "boundary wedge impossible: the direction field's slope against the \
                 boundary layer dips to {min_slope:.3e} (field tangent to or exiting \
                 part of the boundary)"
            )));
        }
        spec.calibrated_slope = min_slope;
        spec.gain = SLOPE_MARGIN / min_slope;
        Ok(spec)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Worst boundary slope of the un-scaled depth level found during
    /// calibration.
    pub fn calibrated_slope(&self) -> f64 {
        self.calibrated_slope
    }

    fn dim(&self) -> usize {
        match self.shape {
            Shape::MovingInterval { .. } => 1,
            _ => 2,
        }
    }

    /// Minimum over sampled times and boundary points (plus exact polygon
    /// vertices) of ⟨∇level, γ⟩.
    fn min_boundary_slope(&self, domain: &DomainSpec, field: &ReflectionField) -> Result<f64> {
        let mut min_slope = f64::INFINITY;
        let horizon = domain.horizon();
        for it in 0..CALIBRATION_TIMES {
            let t = horizon * it as f64 / (CALIBRATION_TIMES - 1) as f64;
            let mut points: Vec<Vec<f64>> = Vec::new();
            match domain.shape() {
                Shape::MovingInterval { left, right } => {
                    points.push(vec![left.value(t)]);
                    points.push(vec![right.value(t)]);
                }
                _ => {
                    for iu in 0..CALIBRATION_POINTS {
                        let u = iu as f64 / CALIBRATION_POINTS as f64;
                        points.push(domain.boundary_point(t, u)?);
                    }
                    if let Shape::MovingScaledPolygon {
                        center,
                        scale,
                        base,
                    } = domain.shape()
                    {
                        let c = [center[0].value(t), center[1].value(t)];
                        let s = scale.value(t);
                        for v in base.vertices() {
                            points.push(vec![c[0] + s * v[0], c[1] + s * v[1]]);
                        }
                    }
                }
            }
            for x in &points {
                let gamma = field.gamma(domain, t, x)?;
                let slope = match &self.layout {
                    Layout::Walls { lower, upper } => {
                        wall_boundary_slope(&self.shape, t, x[0], *lower, *upper, &gamma)
                    }
                    _ => {
                        let (_, _, grad, _) = self.level_jet(t, x);
                        grad.iter().zip(&gamma).map(|(a, b)| a * b).sum()
                    }
                };
                min_slope = min_slope.min(slope);
            }
        }
        Ok(min_slope)
    }

    /// The scalar level that drives the taper at `(t, x)` — wall layouts
    /// use the raw depth to the nearer wall, the others their smooth level.
    /// Used by samplers that must avoid the taper's knee and cutoff seams.
    pub(crate) fn level_value(&self, t: f64, x: &[f64]) -> f64 {
        match (&self.layout, &self.shape) {
            (Layout::Walls { .. }, Shape::MovingInterval { left, right }) => {
                (x[0] - left.value(t)).min(right.value(t) - x[0])
            }
            _ => self.level_jet(t, x).0,
        }
    }

    /// Depth level ℓ(t,x) with time derivative, gradient, and Hessian.
    /// Only meaningful for the radial and soft-minimum layouts.
    fn level_jet(&self, t: f64, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        match (&self.layout, &self.shape) {
            (Layout::RadialDepth, Shape::MovingDisk { center, radius }) => {
                let c = [center[0].value(t), center[1].value(t)];
                let q = [x[0] - c[0], x[1] - c[1]];
                let rq = (q[0] * q[0] + q[1] * q[1]).sqrt();
                let level = radius.value(t) - rq;
                if level >= self.width || rq < 1e-300 {
                    // Deeper than the layer (which also covers the center,
                    // where the radial direction degenerates).
                    return (level, 0.0, vec![0.0; 2], vec![0.0; 4]);
                }
                let qh = [q[0] / rq, q[1] / rq];
                let cdot = [center[0].rate(t), center[1].rate(t)];
                let dt = radius.rate(t) + qh[0] * cdot[0] + qh[1] * cdot[1];
                let grad = vec![-qh[0], -qh[1]];
                let mut hess = vec![0.0; 4];
                for a in 0..2 {
                    for b in 0..2 {
                        let proj = if a == b { 1.0 } else { 0.0 } - qh[a] * qh[b];
                        hess[a * 2 + b] = -proj / rq;
                    }
                }
                (level, dt, grad, hess)
            }
            (
                Layout::SoftMinDepth { sigma },
                Shape::MovingScaledPolygon {
                    center,
                    scale,
                    base,
                },
            ) => {
                let c = [center[0].value(t), center[1].value(t)];
                let cdot = [center[0].rate(t), center[1].rate(t)];
                let s = scale.value(t);
                let sdot = scale.rate(t);
                let normals = base.edge_normals();
                let offsets = base.edge_offsets();
                let m = normals.len();
                // Edge depths and their time rates.
                let mut depth = vec![0.0; m];
                let mut depth_dot = vec![0.0; m];
                for i in 0..m {
                    depth[i] = s * offsets[i]
                        - ((x[0] - c[0]) * normals[i][0] + (x[1] - c[1]) * normals[i][1]);
                    depth_dot[i] =
                        sdot * offsets[i] + cdot[0] * normals[i][0] + cdot[1] * normals[i][1];
                }
                let dmin = depth.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut wsum = 0.0;
                let mut wgt = vec![0.0; m];
                for i in 0..m {
                    wgt[i] = ((dmin - depth[i]) / sigma).exp();
                    wsum += wgt[i];
                }
                for wi in &mut wgt {
                    *wi /= wsum;
                }
                // Shifted soft minimum: ℓ̂ = σ·ln m − σ·ln Σ exp(−depth/σ),
                // which sits in [min depth, min depth + σ·ln m]. The shift
                // makes ℓ̂ ≥ 0 exact on the closure and keeps the support
                // of taper(ℓ̂) inside the true boundary layer.
                let level = (m as f64).ln() * sigma + dmin - sigma * wsum.ln();
                let dt: f64 = (0..m).map(|i| wgt[i] * depth_dot[i]).sum();
                let mut grad = vec![0.0; 2];
                for i in 0..m {
                    grad[0] -= wgt[i] * normals[i][0];
                    grad[1] -= wgt[i] * normals[i][1];
                }
                let mut hess = vec![0.0; 4];
                for a in 0..2 {
                    for b in 0..2 {
                        let mut nn = 0.0;
                        for i in 0..m {
                            nn += wgt[i] * normals[i][a] * normals[i][b];
                        }
                        hess[a * 2 + b] = (grad[a] * grad[b] - nn) / sigma;
                    }
                }
                (level, dt, grad, hess)
            }
            _ => unreachable!("layout/shape pairing is fixed at calibration"),
        }
    }
}

/// Decide which profile the wall carries by probing the direction field
/// just inside it across the horizon; the orientation must be constant.
fn wall_profile(
    domain: &DomainSpec,
    field: &ReflectionField,
    width: f64,
    lower: bool,
) -> Result<WallProfile> {
    let (left, right) = domain
        .as_interval()
        .expect("wall profiles only exist for interval sections");
    let mut seen: Option<bool> = None;
    for it in 0..CALIBRATION_TIMES {
        let t = domain.horizon() * it as f64 / (CALIBRATION_TIMES - 1) as f64;
        let probe = if lower {
            left.value(t) + width / 20.0
        } else {
            right.value(t) - width / 20.0
        };
        let g = field.gamma(domain, t, &[probe])?;
        // γ positive at the lower wall (or negative at the upper one)
        // points into the domain.
        let inward = if lower { g[0] > 0.0 } else { g[0] < 0.0 };
        match seen {
            None => seen = Some(inward),
            Some(prev) if prev != inward => {
                return Err(Error::Unsupported(
                    "direction field flips orientation at a wall over the horizon".into(),
                ))
            }
            _ => {}
        }
    }
    Ok(if seen.unwrap_or(true) {
        WallProfile::RisingTaper
    } else {
        WallProfile::WallRidge
    })
}

/// Boundary slope ⟨∇α, γ⟩/gain at an interval wall; the profiles are
/// normalized so this is exactly 1 for either orientation.
fn wall_boundary_slope(
    shape: &Shape,
    t: f64,
    x: f64,
    lower: WallProfile,
    upper: WallProfile,
    gamma: &[f64],
) -> f64 {
    let Shape::MovingInterval { left, right } = shape else {
        unreachable!("wall slope only exists for interval sections");
    };
    let a = left.value(t);
    let b = right.value(t);
    let at_lower = (x - a).abs() <= (b - x).abs();
    let profile = if at_lower { lower } else { upper };
    // Rising taper slope is +1 in depth; the ridge slope is −1 in depth.
    // Depth increases in +x at the lower wall and −x at the upper wall.
    let d_alpha_dx = match (profile, at_lower) {
        (WallProfile::RisingTaper, true) => 1.0,
        (WallProfile::RisingTaper, false) => -1.0,
        (WallProfile::WallRidge, true) => -1.0,
        (WallProfile::WallRidge, false) => 1.0,
    };
    d_alpha_dx * gamma[0]
}

/// Taper `T(s) = s·cutoff(s)`: identity up to a third of the layer, then a
/// twice-differentiable descent to zero at depth `w`, identically zero
/// beyond. Returns (T, T′, T″).
fn taper(s: f64, w: f64) -> (f64, f64, f64) {
    if s >= w {
        return (0.0, 0.0, 0.0);
    }
    let knee = w / 3.0;
    if s <= knee {
        return (s, 1.0, 0.0);
    }
    let span = w - knee;
    let (sv, sd, sdd) = smoothstep5((s - knee) / span);
    let c = 1.0 - sv;
    let cd = -sd / span;
    let cdd = -sdd / (span * span);
    (s * c, c + s * cd, 2.0 * cd + s * cdd)
}

/// Ridge `R(s) = (1 − S(s/w))·(w − s)`: peaks at the wall with R(0) = w and
/// R′(0) = −1, and vanishes twice-differentiably at depth `w`.
fn ridge(s: f64, w: f64) -> (f64, f64, f64) {
    if s >= w {
        return (0.0, 0.0, 0.0);
    }
    if s <= 0.0 {
        return (w - s, -1.0, 0.0);
    }
    let (sv, sd, sdd) = smoothstep5(s / w);
    let c = 1.0 - sv;
    let cd = -sd / w;
    let cdd = -sdd / (w * w);
    (c * (w - s), cd * (w - s) - c, cdd * (w - s) - 2.0 * cd)
}

/// Evaluate the wedge. Points deeper than the layer give exact zeros; the
/// closed form extends smoothly a little outside the closure, where the
/// sign guarantee no longer applies.
pub fn eval_alpha(spec: &AlphaSpec, t: f64, x: &[f64]) -> Result<AlphaJet> {
    let n = spec.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    let t = t.clamp(0.0, spec.horizon);
    let w = spec.width;
    match &spec.layout {
        Layout::Walls { lower, upper } => {
            let Shape::MovingInterval { left, right } = &spec.shape else {
                unreachable!("wall layout is only built on interval sections");
            };
            let a = left.value(t);
            let b = right.value(t);
            let mut jet = AlphaJet::zeros(1);
            // Lower-wall bump in depth s = x − a(t).
            let (v, d1, d2) = match lower {
                WallProfile::RisingTaper => taper(x[0] - a, w),
                WallProfile::WallRidge => ridge(x[0] - a, w),
            };
            jet.value += v;
            jet.dt += d1 * (-left.rate(t));
            jet.grad[0] += d1;
            jet.hess[0] += d2;
            // Upper-wall bump in depth s = b(t) − x.
            let (v, d1, d2) = match upper {
                WallProfile::RisingTaper => taper(b - x[0], w),
                WallProfile::WallRidge => ridge(b - x[0], w),
            };
            jet.value += v;
            jet.dt += d1 * right.rate(t);
            jet.grad[0] -= d1;
            jet.hess[0] += d2;
            jet.value *= spec.gain;
            jet.dt *= spec.gain;
            jet.grad[0] *= spec.gain;
            jet.hess[0] *= spec.gain;
            Ok(jet)
        }
        _ => {
            let (level, ldt, lgrad, lhess) = spec.level_jet(t, x);
            if level >= w {
                return Ok(AlphaJet::zeros(n));
            }
            let (tv, td, tdd) = taper(level, w);
            let g = spec.gain;
            let mut jet = AlphaJet::zeros(n);
            jet.value = g * tv;
            jet.dt = g * td * ldt;
            for a in 0..n {
                jet.grad[a] = g * td * lgrad[a];
                for b in 0..n {
                    jet.hess[a * n + b] = g * (tdd * lgrad[a] * lgrad[b] + td * lhess[a * n + b]);
                }
            }
            Ok(jet)
        }
    }
}
