//! Convex polygon base shapes with exact distance evaluation.

use crate::error::{Error, Result};
use crate::vecn;
use serde::{Deserialize, Serialize};

/// A strictly convex polygon containing the origin in its interior, stored
/// counter-clockwise. Used as the base profile of scaled moving domains:
/// world sections are `center(t) + scale(t)·base`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "PolygonData", into = "PolygonData")]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
    /// Outward unit normal of edge `i` (from vertex i to vertex i+1).
    normals: Vec<[f64; 2]>,
    /// Support offset of edge `i`: ⟨v_i, n_i⟩ > 0 since the origin is interior.
    offsets: Vec<f64>,
    /// Cumulative perimeter up to the start of each edge, plus the total.
    arc_starts: Vec<f64>,
    perimeter: f64,
}

#[derive(Serialize, Deserialize)]
struct PolygonData {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<PolygonData> for ConvexPolygon {
    type Error = Error;
    fn try_from(d: PolygonData) -> Result<Self> {
        ConvexPolygon::new(d.vertices)
    }
}

impl From<ConvexPolygon> for PolygonData {
    fn from(p: ConvexPolygon) -> Self {
        PolygonData {
            vertices: p.vertices,
        }
    }
}

impl ConvexPolygon {
    /// Validate and preprocess a vertex loop. Accepts either orientation
    /// (clockwise input is reversed); rejects non-convex or degenerate
    /// loops and loops that do not strictly contain the origin.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least three vertices"));
        }
        if vertices
            .iter()
            .any(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::invalid("polygon vertex is not finite"));
        }
        // Signed area via the shoelace formula; positive means CCW.
        let n = vertices.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            area2 += a[0] * b[1] - b[0] * a[1];
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let scale: f64 = vertices
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max);
        if area2.abs() < 1e-12 * scale * scale {
            return Err(Error::invalid("polygon is degenerate (zero area)"));
        }
        // Strict convexity: every corner turns left by a non-vanishing cross
        // product once oriented CCW.
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross <= 1e-12 * scale * scale {
                return Err(Error::invalid(
                    "polygon must be strictly convex (collinear or reflex corner found)",
                ));
            }
        }
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        let mut arc_starts = Vec::with_capacity(n);
        let mut perimeter = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            // CCW loop: interior lies left of each edge, so (e_y, −e_x)/|e|
            // points outward.
            let nrm = [e[1] / len, -e[0] / len];
            let off = a[0] * nrm[0] + a[1] * nrm[1];
            if off <= 1e-12 * (1.0 + scale) {
                return Err(Error::invalid(
                    "polygon must contain the origin strictly inside",
                ));
            }
            normals.push(nrm);
            offsets.push(off);
            arc_starts.push(perimeter);
            perimeter += len;
        }
        Ok(ConvexPolygon {
            vertices,
            normals,
            offsets,
            arc_starts,
            perimeter,
        })
    }

    /// Axis-aligned square of half-width 1 centred at the origin.
    pub fn unit_square() -> Self {
        ConvexPolygon::new(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
            .expect("static square is valid")
    }

    /// Regular polygon with `sides` vertices on the unit circle.
    pub fn regular(sides: usize) -> Result<Self> {
        if sides < 3 {
            return Err(Error::invalid("regular polygon needs at least 3 sides"));
        }
        let verts = (0..sides)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / sides as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        ConvexPolygon::new(verts)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edge_normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn edge_offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Distance from the origin to the nearest edge line — the inradius of
    /// the polygon about the origin.
    pub fn origin_inradius(&self) -> f64 {
        self.offsets.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Signed half-plane margin of edge `i` at `z`: positive outside the
    /// edge's supporting line.
    fn edge_margin(&self, i: usize, z: [f64; 2]) -> f64 {
        z[0] * self.normals[i][0] + z[1] * self.normals[i][1] - self.offsets[i]
    }

    /// Signed Euclidean distance to the polygon: negative inside. Inside, the
    /// nearest boundary point always lies on an edge, so the signed distance
    /// is the largest half-plane margin; outside it is the least distance to
    /// an edge segment.
    pub fn signed_distance(&self, z: [f64; 2]) -> f64 {
        let mut inside_margin = f64::NEG_INFINITY;
        for i in 0..self.vertices.len() {
            inside_margin = inside_margin.max(self.edge_margin(i, z));
        }
        if inside_margin <= 0.0 {
            return inside_margin;
        }
        let mut best = f64::INFINITY;
        for i in 0..self.vertices.len() {
            best = best.min(self.segment_distance(i, z));
        }
        best
    }

    fn segment_distance(&self, i: usize, z: [f64; 2]) -> f64 {
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % self.vertices.len()];
        let e = [b[0] - a[0], b[1] - a[1]];
        let w = [z[0] - a[0], z[1] - a[1]];
        let s = ((w[0] * e[0] + w[1] * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
        let p = [a[0] + s * e[0], a[1] + s * e[1]];
        vecn::dist(&[z[0], z[1]], &p)
    }

    /// Closest boundary point and the outward unit direction at `z`
    /// (gradient of the signed distance where it is differentiable).
    pub fn signed_distance_gradient(&self, z: [f64; 2]) -> [f64; 2] {
        let sd = self.signed_distance(z);
        if sd <= 0.0 {
            // Inside: gradient is the outward normal of the deepest margin.
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..self.vertices.len() {
                let m = self.edge_margin(i, z);
                if m > best {
                    best = m;
                    arg = i;
                }
            }
            return self.normals[arg];
        }
        // Outside: direction from the closest boundary point.
        let mut best = f64::INFINITY;
        let mut point = z;
        for i in 0..self.vertices.len() {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % self.vertices.len()];
            let e = [b[0] - a[0], b[1] - a[1]];
            let w = [z[0] - a[0], z[1] - a[1]];
            let s = ((w[0] * e[0] + w[1] * e[1]) / (e[0] * e[0] + e[1] * e[1])).clamp(0.0, 1.0);
            let p = [a[0] + s * e[0], a[1] + s * e[1]];
            let d = vecn::dist(&z, &p);
            if d < best {
                best = d;
                point = p;
            }
        }
        let mut g = [z[0] - point[0], z[1] - point[1]];
        let n = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1e-300);
        g[0] /= n;
        g[1] /= n;
        g
    }

    /// Boundary point at perimeter fraction `u ∈ [0,1)`.
    pub fn boundary_point(&self, u: f64) -> [f64; 2] {
        let target = self.perimeter * u.rem_euclid(1.0);
        let n = self.vertices.len();
        let i = match self
            .arc_starts
            .binary_search_by(|s| s.partial_cmp(&target).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % n];
        let next = if i + 1 < n {
            self.arc_starts[i + 1]
        } else {
            self.perimeter
        };
        let s = ((target - self.arc_starts[i]) / (next - self.arc_starts[i])).clamp(0.0, 1.0);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_loops() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // collinear corner
        assert!(
            ConvexPolygon::new(vec![[-1.0, -1.0], [0.0, -1.0], [1.0, -1.0], [0.0, 1.0]]).is_err()
        );
        // reflex corner
        assert!(ConvexPolygon::new(vec![
            [-1.0, -1.0],
            [1.0, -1.0],
            [0.0, 0.0],
            [1.0, 1.0],
            [-1.0, 1.0]
        ])
        .is_err());
        // origin outside
        assert!(ConvexPolygon::new(vec![[1.0, 1.0], [2.0, 1.0], [1.5, 2.0]]).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let ccw = ConvexPolygon::unit_square();
        let cw =
            ConvexPolygon::new(vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]]).unwrap();
        assert_eq!(
            ccw.signed_distance([2.0, 0.0]),
            cw.signed_distance([2.0, 0.0])
        );
        assert!(cw.origin_inradius() > 0.0);
    }

    #[test]
    fn square_distances_match_hand_geometry() {
        let sq = ConvexPolygon::unit_square();
        // nearest feature is the right edge
        assert!((sq.signed_distance([2.0, 0.0]) - 1.0).abs() < 1e-15);
        // nearest feature is the corner (1,1)
        assert!((sq.signed_distance([2.0, 2.0]) - std::f64::consts::SQRT_2).abs() < 1e-15);
        // inside: depth to the right edge
        assert!((sq.signed_distance([0.3, 0.2]) + 0.7).abs() < 1e-15);
        // boundary
        assert!(sq.signed_distance([1.0, 0.5]).abs() < 1e-15);
        assert_eq!(sq.origin_inradius(), 1.0);
        assert_eq!(sq.perimeter(), 8.0);
    }

    #[test]
    fn gradient_is_unit_and_points_outward() {
        let sq = ConvexPolygon::unit_square();
        let g = sq.signed_distance_gradient([2.0, 0.0]);
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
        let g = sq.signed_distance_gradient([2.0, 2.0]);
        let s = 0.5_f64.sqrt();
        assert!((g[0] - s).abs() < 1e-12 && (g[1] - s).abs() < 1e-12);
        let g = sq.signed_distance_gradient([0.3, 0.2]);
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let hex = ConvexPolygon::regular(6).unwrap();
        let pts = [[1.7, 0.4], [-0.3, 0.1], [0.0, 1.4], [-2.0, -1.0]];
        let h = 1e-6;
        for z in pts {
            let g = hex.signed_distance_gradient(z);
            for a in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[a] += h;
                zm[a] -= h;
                let fd = (hex.signed_distance(zp) - hex.signed_distance(zm)) / (2.0 * h);
                assert!(
                    (g[a] - fd).abs() < 1e-8,
                    "axis {a} at {z:?}: analytic {} vs fd {fd}",
                    g[a]
                );
            }
        }
    }

    #[test]
    fn boundary_points_lie_on_boundary() {
        let sq = ConvexPolygon::unit_square();
        for k in 0..64 {
            let p = sq.boundary_point(k as f64 / 64.0);
            assert!(sq.signed_distance(p).abs() < 1e-12);
        }
        // u = 0 is the first vertex
        let p = sq.boundary_point(0.0);
        assert_eq!(p, [-1.0, -1.0]);
        // an eighth of the perimeter along the first edge
        let p = sq.boundary_point(0.125);
        assert!((p[0] - 0.0).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12);
    }
}
