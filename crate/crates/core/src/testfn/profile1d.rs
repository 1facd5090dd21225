//! Scalar building blocks of the test-function suite: the even radial
//! band profile `f` and the monotone identity clamp `ν`.

use crate::error::{Error, Result};

/// Cubic smoothstep `S(s) = 3s² − 2s³` with `S(0)=0`, `S(1)=1` and flat
/// first derivative at both ends.
pub(crate) fn smoothstep(s: f64) -> (f64, f64) {
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

/// Quintic smoothstep `6s⁵ − 15s⁴ + 10s³` with value, first, and second
/// derivative; both ends are second-order flat, so compositions stay C².
/// Inputs outside [0, 1] clamp to the flat extensions.
pub(crate) fn smoothstep5(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s2 = s * s;
    let s3 = s2 * s;
    (
        s3 * (6.0 * s2 - 15.0 * s + 10.0),
        30.0 * s2 * (s2 - 2.0 * s + 1.0),
        60.0 * s * (2.0 * s2 - 3.0 * s + 1.0),
    )
}

/// `∫₀ˣ S(s) ds = x³ − x⁴/2`.
fn smoothstep_integral(x: f64) -> f64 {
    x * x * x - 0.5 * x * x * x * x
}

/// `∫₀ˣ s·S(s) ds = (3/4)x⁴ − (2/5)x⁵`.
fn smoothstep_first_moment(x: f64) -> f64 {
    0.75 * x.powi(4) - 0.4 * x.powi(5)
}

/// Even profile in the direction cosine `u`: a paraboloid cap
/// `c·(1−u²)` on the band `|u| ≤ θ`, blended C²-smoothly to a positive
/// constant plateau beyond `|u| = θ + blend_width`. The blend prescribes
/// the derivative `f′(v) = −2cv·S((θ+bw−v)/bw)`, which matches the band
/// derivative at `v = θ` and vanishes (with vanishing curvature) at the
/// plateau, so `f` is C² on all of ℝ.
#[derive(Clone, Debug, PartialEq)]
pub struct BandProfile {
    theta: f64,
    band_constant: f64,
    blend_width: f64,
    plateau: f64,
}

impl BandProfile {
    pub fn new(theta: f64, band_constant: f64, blend_width: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid("band half-width must lie in (0, 1)"));
        }
        if !(band_constant > 0.0 && band_constant.is_finite()) {
            return Err(Error::invalid("band constant must be positive"));
        }
        if !blend_width.is_finite() || blend_width <= 0.0 || theta + blend_width > 1.0 {
            return Err(Error::invalid(
                "blend width must be positive with theta + blend_width ≤ 1",
            ));
        }
        let mut profile = BandProfile {
            theta,
            band_constant,
            blend_width,
            plateau: 0.0,
        };
        profile.plateau = profile.blend_value(theta + blend_width);
        if profile.plateau <= 0.0 {
            return Err(Error::invalid("profile plateau must stay positive"));
        }
        Ok(profile)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn band_constant(&self) -> f64 {
        self.band_constant
    }

    pub fn blend_width(&self) -> f64 {
        self.blend_width
    }

    /// The plateau value — also the global minimum of `f`, hence the
    /// certified quadratic-growth constant `χ`.
    pub fn min_value(&self) -> f64 {
        self.plateau
    }

    /// Closed-form value inside the blend `v ∈ [θ, θ+bw]`, integrating the
    /// prescribed derivative from the band edge.
    fn blend_value(&self, v: f64) -> f64 {
        let c = self.band_constant;
        let bw = self.blend_width;
        let edge = self.theta + bw;
        let w = (edge - v) / bw;
        let run = bw * edge * (0.5 - smoothstep_integral(w))
            - bw * bw * (0.35 - smoothstep_first_moment(w));
        c * (1.0 - self.theta * self.theta) - 2.0 * c * run
    }

    /// `(f(u), f′(u), f″(u))`.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        let c = self.band_constant;
        let v = u.abs();
        let sign = if u < 0.0 { -1.0 } else { 1.0 };
        if v <= self.theta {
            return (c * (1.0 - u * u), -2.0 * c * u, -2.0 * c);
        }
        let edge = self.theta + self.blend_width;
        if v >= edge {
            return (self.plateau, 0.0, 0.0);
        }
        let w = (edge - v) / self.blend_width;
        let (s, s_prime) = smoothstep(w);
        let dv = -2.0 * c * v * s;
        let ddv = -2.0 * c * s + 2.0 * c * v * s_prime / self.blend_width;
        (self.blend_value(v), sign * dv, ddv)
    }
}

/// Monotone C² clamp `ν` with `ν ≡ 1` below `lo`, `ν(t) = t` exactly at
/// and above `hi`, and `ν(t) ≥ max(1, t)` everywhere. The ramp integrates
/// a smoothstep slope, so matching the identity at `hi` forces
/// `lo = 2 − hi`; `hi ≤ 3/2` keeps the flat region covering `(−∞, 1/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clamp {
    lo: f64,
    hi: f64,
}

impl Clamp {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > 1.0 && hi <= 1.5) {
            return Err(Error::invalid("clamp upper knot must lie in (1, 3/2]"));
        }
        if (lo - (2.0 - hi)).abs() > 1e-12 {
            return Err(Error::invalid(
                "clamp knots must satisfy lo = 2 − hi so the identity tail matches",
            ));
        }
        Ok(Clamp { lo, hi })
    }

    pub fn knots(&self) -> [f64; 2] {
        [self.lo, self.hi]
    }

    /// `(ν(t), ν′(t), ν″(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.lo {
            return (1.0, 0.0, 0.0);
        }
        if t >= self.hi {
            return (t, 1.0, 0.0);
        }
        let span = self.hi - self.lo;
        let s = (t - self.lo) / span;
        let (slope, slope_prime) = smoothstep(s);
        let value = 1.0 + span * smoothstep_integral(s);
        (value, slope, slope_prime / span)
    }
}

impl Default for Clamp {
    fn default() -> Self {
        Clamp { lo: 0.5, hi: 1.5 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_profile() -> BandProfile {
        BandProfile::new(0.5, 1.0, 0.2).unwrap()
    }

    #[test]
    fn band_values_are_the_paraboloid_cap() {
        let f = default_profile();
        assert_eq!(f.eval(0.0), (1.0, 0.0, -2.0));
        assert_eq!(f.eval(0.25).0, 0.9375);
        assert_eq!(f.eval(0.25).1, -0.5);
        assert_eq!(f.eval(0.5).0, 0.75);
    }

    #[test]
    fn plateau_matches_hand_integration() {
        // ∫_θ^{θ+bw} v·S((θ+bw−v)/bw) dv with θ=0.5, bw=0.2 equals
        // 0.2·0.7·(1/2) − 0.04·(7/20) = 0.056, so f caps at
        // 0.75 − 2·0.056 = 0.638.
        let f = default_profile();
        assert!((f.min_value() - 0.638).abs() < 1e-15);
        assert!((f.eval(0.7).0 - 0.638).abs() < 1e-15);
        let (v, d, dd) = f.eval(0.9);
        assert!((v - 0.638).abs() < 1e-15);
        assert_eq!(d, 0.0);
        assert_eq!(dd, 0.0);
    }

    #[test]
    fn blend_interior_matches_closed_form() {
        // At v = 0.6 the remaining-run integrals give f = 0.6615 and the
        // prescribed derivative is −2·0.6·S(0.5) = −0.6.
        let f = default_profile();
        let (v, d, _) = f.eval(0.6);
        assert!((v - 0.6615).abs() < 1e-15);
        assert!((d + 0.6).abs() < 1e-15);
    }

    #[test]
    fn profile_is_even_and_c2_at_the_seams() {
        let f = default_profile();
        for u in [0.1, 0.37, 0.55, 0.68, 0.9, 2.0] {
            let (vp, dp, ddp) = f.eval(u);
            let (vm, dm, ddm) = f.eval(-u);
            assert_eq!(vp, vm);
            assert_eq!(dp, -dm);
            assert_eq!(ddp, ddm);
        }
        for seam in [0.5, 0.7] {
            let below = f.eval(seam - 1e-9);
            let above = f.eval(seam + 1e-9);
            assert!((below.0 - above.0).abs() < 1e-8);
            assert!((below.1 - above.1).abs() < 1e-7);
            assert!((below.2 - above.2).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_decreases_from_center_to_plateau() {
        let f = default_profile();
        for k in 0..=200 {
            let u = k as f64 / 200.0;
            assert!(f.eval(u).1 <= 0.0);
            assert!(f.eval(u).0 >= f.min_value() - 1e-15);
        }
    }

    #[test]
    fn profile_validation() {
        assert!(BandProfile::new(0.0, 1.0, 0.2).is_err());
        assert!(BandProfile::new(0.5, 0.0, 0.2).is_err());
        assert!(BandProfile::new(0.9, 1.0, 0.2).is_err());
    }

    #[test]
    fn clamp_matches_dyadic_freeze() {
        let nu = Clamp::default();
        // Ramp slope S((1−1/2)/1) = 1/2; value 1 + I₁(1/2) = 1 + 3/32;
        // curvature S′(1/2) = 3/2 — all dyadic, so equality is exact.
        assert_eq!(nu.eval(1.0), (1.09375, 0.5, 1.5));
        assert_eq!(nu.eval(0.3), (1.0, 0.0, 0.0));
        assert_eq!(nu.eval(0.5), (1.0, 0.0, 0.0));
        assert_eq!(nu.eval(1.5), (1.5, 1.0, 0.0));
        assert_eq!(nu.eval(2.0), (2.0, 1.0, 0.0));
        assert_eq!(nu.eval(7.25), (7.25, 1.0, 0.0));
    }

    #[test]
    fn clamp_dominates_identity_and_one() {
        let nu = Clamp::default();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let t = -1.0 + 3.0 * k as f64 / 400.0;
            let (v, d, _) = nu.eval(t);
            assert!(v >= 1.0);
            assert!(v >= t);
            assert!(d >= 0.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn clamp_validation() {
        assert!(Clamp::new(0.5, 1.5).is_ok());
        assert!(Clamp::new(0.6, 1.4).is_ok());
        assert!(Clamp::new(0.5, 1.6).is_err());
        assert!(Clamp::new(0.4, 1.5).is_err());
        assert!(Clamp::new(1.0, 1.0).is_err());
    }
}
