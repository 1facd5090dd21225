//! Comparison-function toolbox for doubling arguments on moving domains.
//!
//! The centerpiece is a direction-penalizing gauge `g(ξ, p)`: quadratic in
//! the momentum `p`, shaped so that its radial derivative `⟨∇_p g, ξ⟩`
//! vanishes while `⟨p, ξ⟩/|p|` stays inside an obliqueness band `[−θ, θ]`
//! and takes the favorable sign outside it. Composing with a direction
//! field and a monotone clamp `ν` gives `h(t,x,p) = ν(g(γ(t,x), p))`, and
//! scaling gives the doubling kernel `w_ε(t,x,y) = ε·h(t, x, (x−y)/ε)`.
//! A boundary wedge `α` with unit oblique slope on the boundary rounds out
//! the toolbox. Every object carries analytic derivative blocks, and a
//! certification/verification suite measures all the inequalities the
//! comparison arguments consume.

mod alpha;
mod check;
mod gfun;
mod hfun;
mod profile1d;

pub use alpha::{eval_alpha, AlphaJet, AlphaSpec};
pub use check::{certify_constants, verify_test_properties, CertifiedConstants, TestFnBudget};
pub use gfun::{eval_g, GBlocks};
pub use hfun::{eval_h, eval_w_eps, HBlocks, WBlocks};
pub use profile1d::{BandProfile, Clamp};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the gauge/clamp pair, together with the certified
/// constants once a verification pass has produced them.
///
/// `theta` is the obliqueness band half-width; `band_constant` scales the
/// whole gauge; `blend_width` is the width of the twice-differentiable
/// blend that flattens the radial profile beyond the band. The derived
/// profile and clamp are rebuilt from these on deserialization, so a
/// record is always internally consistent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsData", into = "ParamsData")]
pub struct TestFunctionParams {
    theta: f64,
    band_constant: f64,
    blend_width: f64,
    nu_knots: (f64, f64),
    pub(crate) profile: BandProfile,
    pub(crate) clamp: Clamp,
    /// Upper constant certified by the sampling pass, if one has run.
    c_certified: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsData {
    theta: f64,
    band_constant: f64,
    blend_width: f64,
    nu_knots: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_certified: Option<f64>,
}

impl TryFrom<ParamsData> for TestFunctionParams {
    type Error = Error;
    fn try_from(d: ParamsData) -> Result<Self> {
        let mut p =
            TestFunctionParams::with_knots(d.theta, d.band_constant, d.blend_width, d.nu_knots)?;
        p.c_certified = d.c_certified;
        Ok(p)
    }
}

impl From<TestFunctionParams> for ParamsData {
    fn from(p: TestFunctionParams) -> Self {
        ParamsData {
            theta: p.theta,
            band_constant: p.band_constant,
            blend_width: p.blend_width,
            nu_knots: p.nu_knots,
            c_certified: p.c_certified,
        }
    }
}

impl TestFunctionParams {
    pub fn new(theta: f64, band_constant: f64, blend_width: f64) -> Result<Self> {
        TestFunctionParams::with_knots(theta, band_constant, blend_width, (0.5, 1.5))
    }

    pub fn with_knots(
        theta: f64,
        band_constant: f64,
        blend_width: f64,
        nu_knots: (f64, f64),
    ) -> Result<Self> {
        let profile = BandProfile::new(theta, band_constant, blend_width)?;
        let clamp = Clamp::new(nu_knots.0, nu_knots.1)?;
        Ok(TestFunctionParams {
            theta,
            band_constant,
            blend_width,
            nu_knots,
            profile,
            clamp,
            c_certified: None,
        })
    }

    /// Parameters whose band matches a certified obliqueness constant; the
    /// blend width shrinks as needed to keep `theta + blend_width < 1`.
    pub fn for_theta(theta: f64) -> Result<Self> {
        let blend = (0.5 * (1.0 - theta)).min(0.2);
        TestFunctionParams::new(theta, 1.0, blend)
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

    pub fn nu_knots(&self) -> (f64, f64) {
        self.nu_knots
    }

    /// Structural lower constant χ: the plateau value of the radial
    /// profile, so `g ≥ χ|p|²` and `h ≥ χ|p|²` hold by construction.
    pub fn chi(&self) -> f64 {
        self.profile.min_value()
    }

    /// Certified upper constant, once a verification pass has stored one.
    pub fn c_certified(&self) -> Option<f64> {
        self.c_certified
    }

    pub(crate) fn set_certified(&mut self, c: f64) {
        self.c_certified = Some(c);
    }
}

impl Default for TestFunctionParams {
    fn default() -> Self {
        TestFunctionParams::new(0.5, 1.0, 0.2).expect("default parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_have_positive_floor() {
        let p = TestFunctionParams::default();
        assert_eq!(p.theta(), 0.5);
        assert!((p.chi() - 0.638).abs() < 1e-12);
        assert_eq!(p.nu_knots(), (0.5, 1.5));
        assert!(p.c_certified().is_none());
    }

    #[test]
    fn theta_constructor_keeps_band_inside_the_unit_interval() {
        let p = TestFunctionParams::for_theta(0.99).unwrap();
        assert!(p.theta() + p.blend_width() <= 1.0);
        assert!(p.chi() > 0.0);
        let p = TestFunctionParams::for_theta(0.3).unwrap();
        assert_eq!(p.blend_width(), 0.2);
    }

    #[test]
    fn serde_round_trip_rebuilds_derived_pieces() {
        let mut p = TestFunctionParams::new(0.6, 1.2, 0.1).unwrap();
        p.set_certified(7.25);
        let text = serde_json::to_string(&p).unwrap();
        let back: TestFunctionParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.c_certified(), Some(7.25));
        // Out-of-range records are rejected on the way in.
        assert!(serde_json::from_str::<TestFunctionParams>(
            "{\"theta\":1.4,\"band_constant\":1.0,\"blend_width\":0.1,\"nu_knots\":[0.5,1.5]}"
        )
        .is_err());
    }
}
