//! Unit reflection direction fields γ(t,x) with derivative blocks.

use super::{DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::vecn;
use serde::{Deserialize, Serialize};

/// Step used for the one semi-analytic block (second space derivatives of
/// the smoothed polygon normal): central differences of the analytic first
/// derivative.
const POLYGON_DXX_STEP: f64 = 1e-5;

/// Floor under |∇(smoothed distance)|; below it the direction field is
/// genuinely undefined (deep-interior balance point of the smoothed normal).
const GRADIENT_FLOOR: f64 = 1e-7;

/// A unit direction field along which paths are pushed back into the moving
/// domain. `gamma` points inward; `outward` gives the sign-flipped twin used
/// by the PDE boundary condition.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "FieldData", into = "FieldData")]
pub enum ReflectionField {
    /// Fixed direction everywhere (normalized at construction).
    ConstantOblique { direction: Vec<f64> },
    /// Inward normal of the section, smoothed near corners: the negated,
    /// normalized gradient of a softened signed distance with temperature
    /// `smoothing` (in world length units). For intervals and disks the
    /// normalized field is independent of the smoothing.
    InwardNormalSmoothed { smoothing: f64 },
    /// The smoothed inward normal rotated clockwise by `angle_rad`
    /// (2D sections only).
    RotatedNormal { angle_rad: f64, smoothing: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FieldData {
    ConstantOblique { direction: Vec<f64> },
    InwardNormalSmoothed { smoothing: f64 },
    RotatedNormal { angle_rad: f64, smoothing: f64 },
}

impl TryFrom<FieldData> for ReflectionField {
    type Error = Error;
    fn try_from(d: FieldData) -> Result<Self> {
        match d {
            FieldData::ConstantOblique { direction } => {
                ReflectionField::constant_oblique(direction)
            }
            FieldData::InwardNormalSmoothed { smoothing } => {
                ReflectionField::inward_normal(smoothing)
            }
            FieldData::RotatedNormal {
                angle_rad,
                smoothing,
            } => ReflectionField::rotated_normal(angle_rad, smoothing),
        }
    }
}

impl From<ReflectionField> for FieldData {
    fn from(f: ReflectionField) -> Self {
        match f {
            ReflectionField::ConstantOblique { direction } => {
                FieldData::ConstantOblique { direction }
            }
            ReflectionField::InwardNormalSmoothed { smoothing } => {
                FieldData::InwardNormalSmoothed { smoothing }
            }
            ReflectionField::RotatedNormal {
                angle_rad,
                smoothing,
            } => FieldData::RotatedNormal {
                angle_rad,
                smoothing,
            },
        }
    }
}

/// Value and derivative blocks of γ at one point. Layout: `dx[a*n + b]` is
/// ∂γ_a/∂x_b and `dxx[(a*n + b)*n + c]` is ∂²γ_a/∂x_b∂x_c.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaJet {
    pub value: Vec<f64>,
    pub dt: Vec<f64>,
    pub dx: Vec<f64>,
    pub dxx: Vec<f64>,
}

impl GammaJet {
    fn zeros_with_value(value: Vec<f64>) -> Self {
        let n = value.len();
        GammaJet {
            value,
            dt: vec![0.0; n],
            dx: vec![0.0; n * n],
            dxx: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn dx_at(&self, a: usize, b: usize) -> f64 {
        self.dx[a * self.dim() + b]
    }

    pub fn dxx_at(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dim();
        self.dxx[(a * n + b) * n + c]
    }

    /// Left-multiply every block's γ-component index by a 2×2 matrix.
    fn rotate2(&self, r: &[[f64; 2]; 2]) -> GammaJet {
        let n = self.dim();
        debug_assert_eq!(n, 2);
        let mul = |src: &[f64], width: usize| -> Vec<f64> {
            let mut out = vec![0.0; src.len()];
            for col in 0..width {
                for a in 0..2 {
                    out[a * width + col] = r[a][0] * src[col] + r[a][1] * src[width + col];
                }
            }
            out
        };
        GammaJet {
            value: mul(&self.value, 1),
            dt: mul(&self.dt, 1),
            dx: mul(&self.dx, n),
            dxx: mul(&self.dxx, n * n),
        }
    }
}

impl ReflectionField {
    pub fn constant_oblique(mut direction: Vec<f64>) -> Result<Self> {
        let norm = vecn::norm(&direction);
        if direction.is_empty() || direction.len() > 2 {
            return Err(Error::invalid("direction must have one or two components"));
        }
        if !norm.is_finite() || norm <= 1e-12 {
            return Err(Error::invalid("direction must be a nonzero finite vector"));
        }
        for d in &mut direction {
            *d /= norm;
        }
        Ok(ReflectionField::ConstantOblique { direction })
    }

    pub fn inward_normal(smoothing: f64) -> Result<Self> {
        if !smoothing.is_finite() || smoothing <= 0.0 {
            return Err(Error::invalid("smoothing width must be positive"));
        }
        Ok(ReflectionField::InwardNormalSmoothed { smoothing })
    }

    pub fn rotated_normal(angle_rad: f64, smoothing: f64) -> Result<Self> {
        if !smoothing.is_finite() || smoothing <= 0.0 {
            return Err(Error::invalid("smoothing width must be positive"));
        }
        if !angle_rad.is_finite() || angle_rad.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid(
                "rotation angle must lie strictly inside (-pi/2, pi/2)",
            ));
        }
        Ok(ReflectionField::RotatedNormal {
            angle_rad,
            smoothing,
        })
    }

    pub fn is_normal_based(&self) -> bool {
        !matches!(self, ReflectionField::ConstantOblique { .. })
    }

    pub fn rotation_angle(&self) -> f64 {
        match self {
            ReflectionField::RotatedNormal { angle_rad, .. } => *angle_rad,
            _ => 0.0,
        }
    }

    /// Direction value only.
    pub fn gamma(&self, domain: &DomainSpec, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gamma_jet(domain, t, x)?.value)
    }

    /// Outward twin −γ.
    pub fn outward(&self, domain: &DomainSpec, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gamma(domain, t, x)?;
        for v in &mut g {
            *v = -*v;
        }
        Ok(g)
    }

    /// Direction with first time- and first/second space-derivative blocks.
    pub fn gamma_jet(&self, domain: &DomainSpec, t: f64, x: &[f64]) -> Result<GammaJet> {
        domain.check_time(t)?;
        if x.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: x.len(),
            });
        }
        match self {
            ReflectionField::ConstantOblique { direction } => {
                if direction.len() != domain.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dim(),
                        got: direction.len(),
                    });
                }
                Ok(GammaJet::zeros_with_value(direction.clone()))
            }
            ReflectionField::InwardNormalSmoothed { smoothing } => {
                normal_jet(domain, t, x, *smoothing)
            }
            ReflectionField::RotatedNormal {
                angle_rad,
                smoothing,
            } => {
                if domain.dim() != 2 {
                    return Err(Error::Unsupported(
                        "rotated normal fields need two-dimensional sections".into(),
                    ));
                }
                let base = normal_jet(domain, t, x, *smoothing)?;
                let (c, s) = (angle_rad.cos(), angle_rad.sin());
                // Clockwise rotation by the configured angle.
                Ok(base.rotate2(&[[c, s], [-s, c]]))
            }
        }
    }
}

fn normal_jet(domain: &DomainSpec, t: f64, x: &[f64], smoothing: f64) -> Result<GammaJet> {
    match domain.shape() {
        Shape::MovingInterval { left, right } => {
            // The inward directions near the two walls are +1 and −1; the
            // field extends each wall's value up to the section midpoint
            // (the switch is far outside the near-boundary tube where the
            // field is consumed).
            let mid = (left.value(t) + right.value(t)) / 2.0;
            let v = if x[0] <= mid { 1.0 } else { -1.0 };
            Ok(GammaJet::zeros_with_value(vec![v]))
        }
        Shape::MovingDisk { center, .. } => disk_normal_jet(center, t, x),
        Shape::MovingScaledPolygon {
            center,
            scale,
            base,
        } => polygon_normal_jet(center, scale, base, t, x, smoothing, true),
    }
}

fn disk_normal_jet(center: &[crate::motion::Motion; 2], t: f64, x: &[f64]) -> Result<GammaJet> {
    let c = [center[0].value(t), center[1].value(t)];
    let cdot = [center[0].rate(t), center[1].rate(t)];
    let u = [x[0] - c[0], x[1] - c[1]];
    let r = vecn::norm(&u);
    if r < GRADIENT_FLOOR {
        return Err(Error::Region(format!(
            "inward normal undefined at the disk center (|x - c| = {r:.3e})"
        )));
    }
    let uh = [u[0] / r, u[1] / r];
    let mut jet = GammaJet::zeros_with_value(vec![-uh[0], -uh[1]]);
    // γ = −û with û = (x − c)/|x − c|:
    //   ∂γ_a/∂x_b   = −(δ_ab − û_a û_b)/r
    //   ∂γ_a/∂t     = +(δ_ab − û_a û_b) ċ_b /r
    //   ∂²γ_a/∂x_b∂x_c = (δ_ac û_b + δ_bc û_a + δ_ab û_c − 3 û_a û_b û_c)/r²
    for a in 0..2 {
        for b in 0..2 {
            let proj = delta(a, b) - uh[a] * uh[b];
            jet.dx[a * 2 + b] = -proj / r;
            jet.dt[a] += proj * cdot[b] / r;
            for cc in 0..2 {
                jet.dxx[(a * 2 + b) * 2 + cc] =
                    (delta(a, cc) * uh[b] + delta(b, cc) * uh[a] + delta(a, b) * uh[cc]
                        - 3.0 * uh[a] * uh[b] * uh[cc])
                        / (r * r);
            }
        }
    }
    Ok(jet)
}

/// Softened polygon normal. The softened signed distance is the softmax
/// (log-sum-exp with temperature `smoothing`) of the edge half-plane
/// margins; γ is its negated normalized gradient. Value and first
/// derivatives are closed-form; second space derivatives difference the
/// analytic first derivative (`with_dxx` breaks the recursion).
fn polygon_normal_jet(
    center: &[crate::motion::Motion; 2],
    scale: &crate::motion::Motion,
    base: &super::ConvexPolygon,
    t: f64,
    x: &[f64],
    smoothing: f64,
    with_dxx: bool,
) -> Result<GammaJet> {
    let c = [center[0].value(t), center[1].value(t)];
    let cdot = [center[0].rate(t), center[1].rate(t)];
    let s = scale.value(t);
    let sdot = scale.rate(t);
    let normals = base.edge_normals();
    let offsets = base.edge_offsets();
    let m = normals.len();

    // World-unit edge margins h_i = ⟨x − c, n_i⟩ − s·⟨v_i, n_i⟩ and their
    // time rates; ∇_x h_i = n_i is constant.
    let mut h = vec![0.0; m];
    let mut hdot = vec![0.0; m];
    for i in 0..m {
        h[i] = (x[0] - c[0]) * normals[i][0] + (x[1] - c[1]) * normals[i][1] - s * offsets[i];
        hdot[i] = -(cdot[0] * normals[i][0] + cdot[1] * normals[i][1]) - sdot * offsets[i];
    }
    let hmax = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w = vec![0.0; m];
    let mut z = 0.0;
    for i in 0..m {
        w[i] = ((h[i] - hmax) / smoothing).exp();
        z += w[i];
    }
    for wi in &mut w {
        *wi /= z;
    }

    // u = ∇(softened distance) = Σ w_i n_i and its derivatives.
    let mut u = [0.0; 2];
    let mut udot = [0.0; 2];
    let mut mat = [[0.0; 2]; 2]; // Σ w_i n_i n_iᵀ
    let hbar_dot: f64 = (0..m).map(|i| w[i] * hdot[i]).sum();
    for i in 0..m {
        let wdot = w[i] * (hdot[i] - hbar_dot) / smoothing;
        for a in 0..2 {
            u[a] += w[i] * normals[i][a];
            udot[a] += wdot * normals[i][a];
            for b in 0..2 {
                mat[a][b] += w[i] * normals[i][a] * normals[i][b];
            }
        }
    }
    let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if r < GRADIENT_FLOOR {
        return Err(Error::Region(format!(
            "smoothed normal degenerates where edge pulls balance (|∇| = {r:.3e})"
        )));
    }
    let uh = [u[0] / r, u[1] / r];
    // Du[a][b] = (Σ w n nᵀ − u uᵀ)_ab / smoothing
    let mut du = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            du[a][b] = (mat[a][b] - u[a] * u[b]) / smoothing;
        }
    }
    // γ = −u/|u|: project derivatives through the normalization.
    let mut jet = GammaJet::zeros_with_value(vec![-uh[0], -uh[1]]);
    for a in 0..2 {
        for b in 0..2 {
            let p_ab = delta(a, b) - uh[a] * uh[b];
            jet.dt[a] -= p_ab * udot[b] / r;
            for (k, &dbk) in du[b].iter().enumerate() {
                jet.dx[a * 2 + k] -= p_ab * dbk / r;
            }
        }
    }
    if with_dxx {
        let hstep = POLYGON_DXX_STEP * (1.0 + vecn::norm(x));
        for cc in 0..2 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[cc] += hstep;
            xm[cc] -= hstep;
            let jp = polygon_normal_jet(center, scale, base, t, &xp, smoothing, false)?;
            let jm = polygon_normal_jet(center, scale, base, t, &xm, smoothing, false)?;
            for a in 0..2 {
                for b in 0..2 {
                    jet.dxx[(a * 2 + b) * 2 + cc] =
                        (jp.dx[a * 2 + b] - jm.dx[a * 2 + b]) / (2.0 * hstep);
                }
            }
        }
        // Enforce the symmetry ∂_b∂_c = ∂_c∂_b lost to differencing noise.
        for a in 0..2 {
            let (bc, cb) = (jet.dxx[(a * 2) * 2 + 1], jet.dxx[(a * 2 + 1) * 2]);
            let avg = 0.5 * (bc + cb);
            jet.dxx[(a * 2) * 2 + 1] = avg;
            jet.dxx[(a * 2 + 1) * 2] = avg;
        }
    }
    Ok(jet)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}
