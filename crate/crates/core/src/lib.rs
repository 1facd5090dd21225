//! Reflection problems, reflected diffusions, and oblique-derivative
//! parabolic equations on moving domains.
//!
//! The library is organized around one geometric object — a time-dependent
//! family of bounded convex sections `Ω_t ⊂ ℝⁿ` (n ∈ {1, 2}) swept over a
//! finite horizon — and one direction field `γ(t, x)` of unit obliques along
//! which paths are pushed back into the moving closure. On top of that sit
//! four numerical layers:
//!
//! * [`geometry`] — domain shapes, distance/signed-distance evaluation,
//!   reflection direction fields with derivative blocks, mollified squared
//!   distance, and an empirical verifier for the cone/regularity
//!   assumptions the rest of the toolkit relies on.
//! * [`testfn`] — the comparison-function toolbox: a direction-penalizing
//!   quadratic form `g`, its clamped composition `h = ν(g(γ(t,x), p))`,
//!   the doubling kernel `w_ε(t,x,y) = ε·h(t, x, (x−y)/ε)`, and a boundary
//!   wedge `α`, all with derivative blocks and a sampled certification /
//!   verification suite for the inequalities they are used through.
//! * [`skorohod`] — constrained-path solvers: a penalty ODE solver with an
//!   ε-continuation schedule, closed-form oracles (half-line and radial),
//!   and a validator that scores a candidate decomposition `φ = ψ + λ`
//!   against the defining properties of the reflection problem.
//! * [`rsde`] / [`pde`] — reflected Euler–Maruyama simulation with keyed
//!   counter-based noise, fixed-point (successive substitution) solves and
//!   second-moment contraction experiments; and a monotone finite-difference
//!   solver for oblique-derivative parabolic problems on moving intervals,
//!   with a probabilistic cross-check tying the two layers together.
//!
//! Everything downstream of a seed is deterministic: noise is a pure
//! function of `(seed, path, step, slot)`, parallel reductions are fixed
//! independently of worker count, and reports serialize with stable key
//! order.

pub mod error;
pub mod fit;
pub mod geometry;
pub mod motion;
pub mod path;
pub mod profile;
pub mod report;
pub mod rng;
pub mod skorohod;
pub mod testfn;
pub mod vecn;

pub mod pde;
pub mod rsde;

pub use error::{Error, Result};
pub use motion::Motion;
pub use path::SampledPath;
pub use report::{CheckRow, PropertyReport};
