//! Reflected diffusions on moving domains.
//!
//! Strong trajectories are built by an Euler scheme whose every step is
//! corrected back into the moving closed section: the linear segment from
//! the current state to the free Euler prediction is swept by a closed-form
//! relaxation of the boundary penalty equation, and the accumulated
//! corrections form the pushing record Λ alongside the constrained state X.
//! A fixed-point construction through the full-path constraint solver and a
//! coupled two-start contraction experiment give independent routes to the
//! same object; the test suite cross-checks them against each other and
//! against closed-form laws.
//!
//! Randomness is keyed, not streamed: every Gaussian increment is a pure
//! function of `(seed, path, step, slot)`, so ensembles are bit-identical
//! under any worker count and any single path can be replayed in isolation.

use crate::error::{Error, Result};
use crate::geometry::{subject_name, DomainSpec, ReflectionField};
use crate::motion::Motion;
use crate::path::SampledPath;
use crate::report::{CheckRow, PropertyReport};
use crate::rng;
use crate::skorohod::{self, PenaltyConfig};
use crate::vecn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Start-point containment slack: the initial state must lie in the
/// closed section at `t = 0` up to this distance.
const START_TOL: f64 = 1e-9;

/// Per-node boundary excursion the corrected state is allowed to keep.
const CONSTRAINT_TOL: f64 = 1e-3;

/// Target excursion for the end-of-step polish passes (a quarter of the
/// reported constraint tolerance, so the guarantee has headroom).
const POLISH_TOL: f64 = 2.5e-4;

/// Sub-sweep nodes per Euler step. The swept segment is linear, so its
/// interior never violates more than its endpoints against a static wall;
/// the sweep exists to track walls that move within the step.
const MICRO_SUBSTEPS: usize = 4;

/// Sub-sweep stiffness ratio h/ε of the penalty relaxation. Each push
/// removes the fraction `1 − exp(−RATE·μ)` of the current excursion,
/// where μ is the measured distance decay per unit push.
const MICRO_RATE: f64 = 8.0;

/// End-of-step polish passes (full-projection limit of the relaxation).
const MAX_POLISH: usize = 4;

/// Smallest acceptable distance decay per unit push along the direction
/// field. Below this the field is tangent or outward and the correction
/// cannot restore the constraint.
const MU_MIN: f64 = 0.05;

/// Fixed-point iteration is declared converged at this sup-norm gap.
const PICARD_GAP_TOL: f64 = 1e-4;

/// Trajectory materialization guard for [`simulate_reflected`]; larger
/// ensembles must use the streaming statistics entry points.
const MAX_STORED_STEPS: usize = 20_000_000;

/// Paths per work unit in the coupled-pair reduction; fixed so the
/// floating-point accumulation order never depends on the worker count.
const PAIR_CHUNK: usize = 128;

/// Sampling budget for the declared-Lipschitz audit.
const LIPSCHITZ_TIME_NODES: usize = 9;
const LIPSCHITZ_PAIRS: usize = 32;

/// Key tag separating the Lipschitz-audit stream from trajectory noise.
const LIPSCHITZ_SEED_TAG: u64 = 0x4c69_7073_6368_6974;

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

/// Drift/diffusion coefficient descriptor.
///
/// Shapes are row-major over `(rows, cols)`: a drift on an n-dimensional
/// section has `rows = n, cols = 1`; a diffusion against m noise channels
/// has `rows = n, cols = m`. The smooth table is a one-dimensional cubic
/// Hermite interpolant through its knots, held constant beyond the first
/// and last knot so its values and slope stay bounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    /// Entries independent of `(t, x)`.
    Constant { value: Vec<f64> },
    /// `entry[r,c](x) = offset[r,c] + Σ_k gain[r,c,k] · x_k`.
    Affine { offset: Vec<f64>, gain: Vec<f64> },
    /// Scalar-on-scalar bounded interpolant (requires a 1-d section and a
    /// single column).
    SmoothTable { knots: Vec<f64>, values: Vec<f64> },
}

/// A shape-checked, evaluation-ready coefficient.
pub(crate) enum PreparedCoeff {
    Constant {
        value: Vec<f64>,
    },
    Affine {
        offset: Vec<f64>,
        gain: Vec<f64>,
        dim: usize,
    },
    Table {
        motion: Motion,
        lo: f64,
        hi: f64,
        v_lo: f64,
        v_hi: f64,
    },
}

impl Coefficient {
    pub(crate) fn prepare(
        &self,
        rows: usize,
        cols: usize,
        dim: usize,
        label: &str,
    ) -> Result<PreparedCoeff> {
        let slots = rows * cols;
        match self {
            Coefficient::Constant { value } => {
                if value.len() != slots {
                    return Err(Error::DimensionMismatch {
                        expected: slots,
                        got: value.len(),
                    });
                }
                if !value.iter().all(|v| v.is_finite()) {
                    return Err(Error::invalid(format!("{label}: non-finite entries")));
                }
                Ok(PreparedCoeff::Constant {
                    value: value.clone(),
                })
            }
            Coefficient::Affine { offset, gain } => {
                if offset.len() != slots {
                    return Err(Error::DimensionMismatch {
                        expected: slots,
                        got: offset.len(),
                    });
                }
                if gain.len() != slots * dim {
                    return Err(Error::DimensionMismatch {
                        expected: slots * dim,
                        got: gain.len(),
                    });
                }
                if !offset.iter().chain(gain.iter()).all(|v| v.is_finite()) {
                    return Err(Error::invalid(format!("{label}: non-finite entries")));
                }
                Ok(PreparedCoeff::Affine {
                    offset: offset.clone(),
                    gain: gain.clone(),
                    dim,
                })
            }
            Coefficient::SmoothTable { knots, values } => {
                if rows != 1 || cols != 1 || dim != 1 {
                    return Err(Error::Unsupported(format!(
                        "{label}: smooth-table coefficients are scalar-on-scalar only"
                    )));
                }
                let motion = Motion::spline_from_samples(knots.clone(), values.clone())?;
                if !values.iter().all(|v| v.is_finite()) {
                    return Err(Error::invalid(format!("{label}: non-finite entries")));
                }
                Ok(PreparedCoeff::Table {
                    motion,
                    lo: knots[0],
                    hi: *knots.last().unwrap(),
                    v_lo: values[0],
                    v_hi: *values.last().unwrap(),
                })
            }
        }
    }
}

impl PreparedCoeff {
    /// Evaluate into `out` (length `rows · cols`). All descriptors are
    /// autonomous in time; the argument is kept for interface honesty.
    pub(crate) fn eval_into(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            PreparedCoeff::Constant { value } => out.copy_from_slice(value),
            PreparedCoeff::Affine { offset, gain, dim } => {
                for (rc, o) in out.iter_mut().enumerate() {
                    let mut acc = offset[rc];
                    let row = &gain[rc * dim..(rc + 1) * dim];
                    for (g, xi) in row.iter().zip(x) {
                        acc += g * xi;
                    }
                    *o = acc;
                }
            }
            PreparedCoeff::Table {
                motion,
                lo,
                hi,
                v_lo,
                v_hi,
            } => {
                let u = x[0];
                out[0] = if u <= *lo {
                    *v_lo
                } else if u >= *hi {
                    *v_hi
                } else {
                    motion.value(u)
                };
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

/// Terminal payoff descriptor for ensemble expectations. Every variant is
/// bounded on any bounded box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    Constant {
        value: f64,
    },
    /// `x[index]`.
    Coordinate {
        index: usize,
    },
    /// `cos(frequency · x[index])`.
    Cosine {
        index: usize,
        frequency: f64,
    },
}

impl Payoff {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        let index = match self {
            Payoff::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::invalid("payoff constant must be finite"));
                }
                return Ok(());
            }
            Payoff::Coordinate { index } => *index,
            Payoff::Cosine { index, frequency } => {
                if !frequency.is_finite() {
                    return Err(Error::invalid("payoff frequency must be finite"));
                }
                *index
            }
        };
        if index >= dim {
            return Err(Error::invalid(format!(
                "payoff coordinate {index} out of range for dimension {dim}"
            )));
        }
        Ok(())
    }

    /// Evaluate at a terminal state (coordinates pre-validated).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Payoff::Constant { value } => *value,
            Payoff::Coordinate { index } => x[*index],
            Payoff::Cosine { index, frequency } => (frequency * x[*index]).cos(),
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Ensemble description: coefficients with declared Lipschitz constants,
/// start point, grid, ensemble size, and the noise key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    pub drift: Coefficient,
    /// Declared spatial Lipschitz constant of the drift; audited by
    /// sampling (worst sampled ratio must stay within 1.05 of this).
    pub drift_lipschitz: f64,
    pub diffusion: Coefficient,
    /// Declared spatial Lipschitz constant of the diffusion.
    pub diffusion_lipschitz: f64,
    /// Start point; must lie in the closed section at `t = 0`.
    pub x0: Vec<f64>,
    /// Euler steps over the domain's horizon.
    pub steps: usize,
    /// Ensemble size.
    pub paths: usize,
    /// Noise key; trajectories are pure functions of `(seed, path, step)`.
    pub seed: u64,
    /// Independent Brownian channels.
    pub noise_dim: usize,
}

impl SdeConfig {
    /// Full validity audit against a domain: shapes, start containment,
    /// and the declared-Lipschitz sampling check for both coefficients.
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        self.prepare(domain).map(|_| ())
    }

    fn prepare(&self, domain: &DomainSpec) -> Result<(PreparedCoeff, PreparedCoeff)> {
        let dim = domain.dim();
        if self.steps == 0 {
            return Err(Error::invalid("step count must be positive"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("ensemble needs at least one path"));
        }
        if self.noise_dim == 0 {
            return Err(Error::invalid("noise dimension must be positive"));
        }
        if self.x0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.x0.len(),
            });
        }
        if !self.x0.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("start point must be finite"));
        }
        for (k, v) in [
            ("drift Lipschitz constant", self.drift_lipschitz),
            ("diffusion Lipschitz constant", self.diffusion_lipschitz),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{k} must be finite and >= 0")));
            }
        }
        let start_distance = domain.distance(0.0, &self.x0)?;
        if start_distance > START_TOL {
            return Err(Error::StartsOutside {
                t: 0.0,
                distance: start_distance,
            });
        }
        let drift = self.drift.prepare(dim, 1, dim, "drift")?;
        let diffusion = self
            .diffusion
            .prepare(dim, self.noise_dim, dim, "diffusion")?;
        audit_lipschitz(
            &drift,
            dim,
            domain,
            self.seed,
            0,
            self.drift_lipschitz,
            "drift",
        )?;
        audit_lipschitz(
            &diffusion,
            dim * self.noise_dim,
            domain,
            self.seed,
            1,
            self.diffusion_lipschitz,
            "diffusion",
        )?;
        Ok((drift, diffusion))
    }
}

/// Sample spatial difference quotients of a coefficient over the inflated
/// bounding box and reject declared constants the samples contradict.
fn audit_lipschitz(
    coeff: &PreparedCoeff,
    slots: usize,
    domain: &DomainSpec,
    seed: u64,
    stream: u64,
    declared: f64,
    label: &str,
) -> Result<()> {
    let (lo, hi) = domain.global_bounding_box();
    let dim = lo.len();
    let pad: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| 0.1 * (b - a).max(1.0))
        .collect();
    let key = seed ^ LIPSCHITZ_SEED_TAG;
    let horizon = domain.horizon();
    let mut xa = vec![0.0; dim];
    let mut xb = vec![0.0; dim];
    let mut va = vec![0.0; slots];
    let mut vb = vec![0.0; slots];
    let mut worst = 0.0_f64;
    for ti in 0..LIPSCHITZ_TIME_NODES {
        let t = horizon * ti as f64 / (LIPSCHITZ_TIME_NODES - 1) as f64;
        let cell = stream * LIPSCHITZ_TIME_NODES as u64 + ti as u64;
        for p in 0..LIPSCHITZ_PAIRS {
            for i in 0..dim {
                let span = hi[i] - lo[i] + 2.0 * pad[i];
                let ua = rng::uniform(key, cell, p as u64, 2 * i as u64);
                let ub = rng::uniform(key, cell, p as u64, (2 * (dim + i)) as u64);
                xa[i] = lo[i] - pad[i] + ua * span;
                xb[i] = lo[i] - pad[i] + ub * span;
            }
            let gap = vecn::dist(&xa, &xb);
            if gap < 1e-9 {
                continue;
            }
            coeff.eval_into(t, &xa, &mut va);
            coeff.eval_into(t, &xb, &mut vb);
            worst = worst.max(vecn::dist(&va, &vb) / gap);
        }
    }
    if worst > 1.05 * declared + 1e-12 {
        return Err(Error::invalid(format!(
            "declared {label} Lipschitz constant {declared} is contradicted by sampling \
             (worst difference quotient {worst:.6})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Noise and trajectories
// ---------------------------------------------------------------------------

/// The Gaussian increments that drove one path, kept for exact replay.
/// Row `k` holds the `noise_dim` channel increments of step `k`, already
/// scaled to variance Δt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    horizon: f64,
    noise_dim: usize,
    increments: Vec<f64>,
}

impl NoiseTable {
    pub fn new(horizon: f64, noise_dim: usize, increments: Vec<f64>) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid("noise horizon must be positive"));
        }
        if noise_dim == 0 || increments.is_empty() || !increments.len().is_multiple_of(noise_dim) {
            return Err(Error::invalid(
                "increment count must be a positive multiple of the channel count",
            ));
        }
        if !increments.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("noise increments must be finite"));
        }
        Ok(NoiseTable {
            horizon,
            noise_dim,
            increments,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn steps(&self) -> usize {
        self.increments.len() / self.noise_dim
    }

    /// Channel increments of step `k`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.noise_dim..(k + 1) * self.noise_dim]
    }
}

/// One constrained path: state, pushing record, its running variation,
/// and the noise that drove it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectedTrajectory {
    /// Ensemble index (stable under exclusions).
    pub path: usize,
    /// Constrained state at the step nodes.
    pub x: SampledPath,
    /// Accumulated boundary corrections at the step nodes.
    pub lambda: SampledPath,
    /// Running total variation of the corrections.
    pub tv: Vec<f64>,
    pub noise: NoiseTable,
}

/// A path the corrector had to give up on. Failed paths are excluded and
/// counted — never silently re-rolled, which would bias the ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathFailure {
    pub path: usize,
    pub t: f64,
    pub reason: String,
}

/// Ensemble output: the surviving trajectories plus the exclusion log.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectedEnsemble {
    pub trajectories: Vec<ReflectedTrajectory>,
    pub failures: Vec<PathFailure>,
}

// ---------------------------------------------------------------------------
// The stepping core
// ---------------------------------------------------------------------------

struct StepFailure {
    t: f64,
    reason: String,
}

/// Everything a worker needs to advance paths; shared read-only across
/// the ensemble.
struct SimContext<'a> {
    domain: &'a DomainSpec,
    field: &'a ReflectionField,
    drift: PreparedCoeff,
    diffusion: PreparedCoeff,
    x0: Vec<f64>,
    dim: usize,
    noise_dim: usize,
    steps: usize,
    horizon: f64,
    dt: f64,
    sqrt_dt: f64,
    seed: u64,
}

/// Per-path scratch buffers (one allocation set per path, not per step).
struct Scratch {
    z: Vec<f64>,
    probe: Vec<f64>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize, noise_dim: usize) -> Self {
        Scratch {
            z: vec![0.0; dim],
            probe: vec![0.0; dim],
            drift: vec![0.0; dim],
            diffusion: vec![0.0; dim * noise_dim],
        }
    }
}

impl<'a> SimContext<'a> {
    fn new(cfg: &SdeConfig, domain: &'a DomainSpec, field: &'a ReflectionField) -> Result<Self> {
        let (drift, diffusion) = cfg.prepare(domain)?;
        let horizon = domain.horizon();
        let dt = horizon / cfg.steps as f64;
        Ok(SimContext {
            domain,
            field,
            drift,
            diffusion,
            x0: cfg.x0.clone(),
            dim: domain.dim(),
            noise_dim: cfg.noise_dim,
            steps: cfg.steps,
            horizon,
            dt,
            sqrt_dt: dt.sqrt(),
            seed: cfg.seed,
        })
    }

    fn node_time(&self, k: usize) -> f64 {
        self.horizon * (k as f64 / self.steps as f64)
    }

    /// Variance-Δt Gaussian increments for `(path, step)`.
    fn fill_increments(&self, path: u64, step: u64, out: &mut [f64]) {
        rng::fill_standard_normals(self.seed, path, step, out);
        for v in out.iter_mut() {
            *v *= self.sqrt_dt;
        }
    }

    /// Free Euler prediction `x + b·Δt + σ·ΔW` (increments pre-scaled).
    fn euler_target(&self, t: f64, x: &[f64], dw: &[f64], out: &mut [f64], scr: &mut Scratch) {
        self.drift.eval_into(t, x, &mut scr.drift);
        self.diffusion.eval_into(t, x, &mut scr.diffusion);
        for i in 0..self.dim {
            let mut acc = x[i] + scr.drift[i] * self.dt;
            let row = &scr.diffusion[i * self.noise_dim..(i + 1) * self.noise_dim];
            for (s, w) in row.iter().zip(dw) {
                acc += s * w;
            }
            out[i] = acc;
        }
    }

    /// One relaxation push at `(t, z)` with current excursion `d`; updates
    /// `lam` and the variation tally. `full` switches to the projection
    /// limit used by the end-of-step polish.
    fn push(
        &self,
        t: f64,
        d: f64,
        full: bool,
        lam: &mut [f64],
        tv: &mut f64,
        scr: &mut Scratch,
    ) -> std::result::Result<(), StepFailure> {
        let gamma = self
            .field
            .gamma(self.domain, t, &scr.z)
            .map_err(|e| StepFailure {
                t,
                reason: format!("direction field unavailable: {e}"),
            })?;
        let delta = (0.5 * d).clamp(1e-9, 1e-3);
        for ((p, z), g) in scr.probe.iter_mut().zip(&scr.z).zip(&gamma) {
            *p = z + delta * g;
        }
        let d_probe = self
            .domain
            .distance(t, &scr.probe)
            .map_err(|e| StepFailure {
                t,
                reason: e.to_string(),
            })?;
        let mu = (d - d_probe) / delta;
        if mu.is_nan() || mu < MU_MIN {
            return Err(StepFailure {
                t,
                reason: format!(
                    "direction field does not reduce the boundary distance \
                     (decay rate {mu:.3e} per unit push)"
                ),
            });
        }
        let amount = if full {
            d / mu
        } else {
            (d / mu) * (1.0 - (-MICRO_RATE * mu).exp())
        };
        vecn::axpy(lam, amount, &gamma);
        *tv += amount * vecn::norm(&gamma);
        Ok(())
    }

    /// Correct the linear segment `start → target` over `[t0, t1]`:
    /// sub-sweep of penalty relaxations, then an endpoint polish down to
    /// the projection limit. Writes the net correction into `lam_inc` and
    /// returns the variation spent.
    fn correct_segment(
        &self,
        t0: f64,
        t1: f64,
        start: &[f64],
        target: &[f64],
        lam_inc: &mut [f64],
        scr: &mut Scratch,
    ) -> std::result::Result<f64, StepFailure> {
        lam_inc.iter_mut().for_each(|v| *v = 0.0);
        let mut tv = 0.0;
        let span = t1 - t0;
        for j in 1..=MICRO_SUBSTEPS {
            let s = j as f64 / MICRO_SUBSTEPS as f64;
            let tau = if j == MICRO_SUBSTEPS {
                t1
            } else {
                (t0 + s * span).min(t1)
            };
            for i in 0..self.dim {
                scr.z[i] = start[i] + s * (target[i] - start[i]) + lam_inc[i];
            }
            let d = self.domain.distance(tau, &scr.z).map_err(|e| StepFailure {
                t: tau,
                reason: e.to_string(),
            })?;
            if d > 0.0 {
                self.push(tau, d, false, lam_inc, &mut tv, scr)?;
            }
        }
        for _ in 0..MAX_POLISH {
            for i in 0..self.dim {
                scr.z[i] = target[i] + lam_inc[i];
            }
            let d = self.domain.distance(t1, &scr.z).map_err(|e| StepFailure {
                t: t1,
                reason: e.to_string(),
            })?;
            if d <= POLISH_TOL {
                return Ok(tv);
            }
            self.push(t1, d, true, lam_inc, &mut tv, scr)?;
        }
        for i in 0..self.dim {
            scr.z[i] = target[i] + lam_inc[i];
        }
        let d_end = self.domain.distance(t1, &scr.z).map_err(|e| StepFailure {
            t: t1,
            reason: e.to_string(),
        })?;
        if d_end > CONSTRAINT_TOL {
            return Err(StepFailure {
                t: t1,
                reason: format!(
                    "correction stalled {d_end:.3e} outside the section \
                     (tolerance {CONSTRAINT_TOL:.1e})"
                ),
            });
        }
        Ok(tv)
    }

    /// Advance one path through all steps, reporting each completed step
    /// to the caller. The callback receives the step index, its end time,
    /// the corrected state, the step's correction, the variation spent,
    /// and the scaled increments that drove it.
    fn walk(
        &self,
        path: u64,
        mut after_step: impl FnMut(usize, f64, &[f64], &[f64], f64, &[f64]),
    ) -> std::result::Result<(), PathFailure> {
        let mut scr = Scratch::new(self.dim, self.noise_dim);
        let mut x = self.x0.clone();
        let mut dw = vec![0.0; self.noise_dim];
        let mut target = vec![0.0; self.dim];
        let mut lam_inc = vec![0.0; self.dim];
        for k in 0..self.steps {
            let t0 = self.node_time(k);
            let t1 = self.node_time(k + 1);
            self.fill_increments(path, k as u64, &mut dw);
            self.euler_target(t0, &x, &dw, &mut target, &mut scr);
            let tv_inc = self
                .correct_segment(t0, t1, &x, &target, &mut lam_inc, &mut scr)
                .map_err(|f| PathFailure {
                    path: path as usize,
                    t: f.t,
                    reason: f.reason,
                })?;
            for i in 0..self.dim {
                x[i] = target[i] + lam_inc[i];
            }
            after_step(k, t1, &x, &lam_inc, tv_inc, &dw);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ensemble drivers
// ---------------------------------------------------------------------------

/// Simulate the full ensemble, materializing every surviving trajectory.
///
/// Paths whose correction gives up are excluded and logged — never
/// re-rolled with fresh noise. For ensembles larger than the storage
/// guard, use [`mc_expectation`] or [`pushing_totals`], which stream.
pub fn simulate_reflected(
    cfg: &SdeConfig,
    domain: &DomainSpec,
    field: &ReflectionField,
) -> Result<ReflectedEnsemble> {
    let ctx = SimContext::new(cfg, domain, field)?;
    if cfg.paths.saturating_mul(cfg.steps) > MAX_STORED_STEPS {
        return Err(Error::invalid(format!(
            "ensemble of {} paths x {} steps is too large to materialize; \
             use the streaming statistics entry points",
            cfg.paths, cfg.steps
        )));
    }
    let outcomes: Vec<std::result::Result<ReflectedTrajectory, PathFailure>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let nodes = ctx.steps + 1;
            let mut times = Vec::with_capacity(nodes);
            times.push(0.0);
            let mut xs = Vec::with_capacity(nodes * ctx.dim);
            xs.extend_from_slice(&ctx.x0);
            let mut lams = vec![0.0; ctx.dim];
            let mut tv = Vec::with_capacity(nodes);
            tv.push(0.0);
            let mut noise = Vec::with_capacity(ctx.steps * ctx.noise_dim);
            ctx.walk(p as u64, |_, t1, x, lam_inc, tv_inc, dw| {
                times.push(t1);
                xs.extend_from_slice(x);
                let base = lams.len() - ctx.dim;
                for i in 0..ctx.dim {
                    let prev = lams[base + i];
                    lams.push(prev + lam_inc[i]);
                }
                tv.push(tv.last().unwrap() + tv_inc);
                noise.extend_from_slice(dw);
            })?;
            let x = SampledPath::new(ctx.dim, times.clone(), xs).map_err(|e| PathFailure {
                path: p,
                t: ctx.horizon,
                reason: e.to_string(),
            })?;
            let lambda = SampledPath::new(ctx.dim, times, lams).map_err(|e| PathFailure {
                path: p,
                t: ctx.horizon,
                reason: e.to_string(),
            })?;
            let noise =
                NoiseTable::new(ctx.horizon, ctx.noise_dim, noise).map_err(|e| PathFailure {
                    path: p,
                    t: ctx.horizon,
                    reason: e.to_string(),
                })?;
            Ok(ReflectedTrajectory {
                path: p,
                x,
                lambda,
                tv,
                noise,
            })
        })
        .collect();
    let mut trajectories = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(t) => trajectories.push(t),
            Err(f) => failures.push(f),
        }
    }
    Ok(ReflectedEnsemble {
        trajectories,
        failures,
    })
}

/// Terminal-payoff ensemble statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McRecord {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n).
    pub stderr: f64,
    pub paths_used: usize,
    pub paths_failed: usize,
}

/// Sample mean and standard error of `payoff(X(T))` over the ensemble.
/// Streams path-by-path: nothing is materialized beyond one terminal
/// value per path, so ensemble size is bounded by time, not memory.
pub fn mc_expectation(
    cfg: &SdeConfig,
    domain: &DomainSpec,
    field: &ReflectionField,
    payoff: &Payoff,
) -> Result<McRecord> {
    let ctx = SimContext::new(cfg, domain, field)?;
    payoff.validate(ctx.dim)?;
    let outcomes: Vec<std::result::Result<f64, PathFailure>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let mut terminal = ctx.x0.clone();
            ctx.walk(p as u64, |_, _, x, _, _, _| terminal.copy_from_slice(x))?;
            Ok(payoff.eval(&terminal))
        })
        .collect();
    let mut values = Vec::with_capacity(cfg.paths);
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(v) => values.push(v),
            Err(_) => failed += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyEnsemble { paths: cfg.paths });
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(McRecord {
        mean,
        stderr,
        paths_used: n,
        paths_failed: failed,
    })
}

/// Total pushing variation `|Λ|(T)` per surviving path (ensemble order),
/// plus the exclusion log. Streams like [`mc_expectation`].
pub fn pushing_totals(
    cfg: &SdeConfig,
    domain: &DomainSpec,
    field: &ReflectionField,
) -> Result<(Vec<f64>, Vec<PathFailure>)> {
    let ctx = SimContext::new(cfg, domain, field)?;
    let outcomes: Vec<std::result::Result<f64, PathFailure>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let mut total = 0.0;
            ctx.walk(p as u64, |_, _, _, _, tv_inc, _| total += tv_inc)?;
            Ok(total)
        })
        .collect();
    let mut totals = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(v) => totals.push(v),
            Err(f) => failures.push(f),
        }
    }
    if totals.is_empty() {
        return Err(Error::EmptyEnsemble { paths: cfg.paths });
    }
    Ok((totals, failures))
}

// ---------------------------------------------------------------------------
// Fixed-point construction
// ---------------------------------------------------------------------------

/// Fixed-point iteration record: all iterates (the zeroth is the
/// constrained constant-start path) and the sup-norm gaps between
/// consecutive ones.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardRecord {
    pub iterates: Vec<SampledPath>,
    pub sup_gaps: Vec<f64>,
    pub converged: bool,
}

/// Iterate `X ↦ constrain(x0 + ∫b(s, X) ds + ∫σ(s, X) dW)` on a fixed
/// noise table, where `constrain` is the full-path continuation solver.
/// Converges when the sup gap drops to 1e-4; three consecutive
/// non-decreasing gaps are reported as divergence.
pub fn picard_solve(
    cfg: &SdeConfig,
    domain: &DomainSpec,
    field: &ReflectionField,
    noise: &NoiseTable,
    n_iter: usize,
) -> Result<PicardRecord> {
    let ctx = SimContext::new(cfg, domain, field)?;
    if n_iter < 2 {
        return Err(Error::invalid("fixed-point iteration needs n_iter >= 2"));
    }
    if noise.noise_dim() != ctx.noise_dim {
        return Err(Error::DimensionMismatch {
            expected: ctx.noise_dim,
            got: noise.noise_dim(),
        });
    }
    if noise.steps() != ctx.steps {
        return Err(Error::invalid(format!(
            "noise table has {} steps, configuration expects {}",
            noise.steps(),
            ctx.steps
        )));
    }
    if (noise.horizon() - ctx.horizon).abs() > 1e-12 * ctx.horizon.max(1.0) {
        return Err(Error::invalid(format!(
            "noise horizon {} does not match the domain horizon {}",
            noise.horizon(),
            ctx.horizon
        )));
    }
    let times: Vec<f64> = (0..=ctx.steps).map(|k| ctx.node_time(k)).collect();
    let penalty_cfg = PenaltyConfig::default();
    let constrain = |psi: &SampledPath| -> Result<SampledPath> {
        Ok(skorohod::solve(psi, domain, field, &penalty_cfg)?.phi)
    };

    // Zeroth iterate: the constrained constant-start path, so that
    // frozen coefficients (b = σ = 0) close the loop after one step.
    let flat0: Vec<f64> = times.iter().flat_map(|_| ctx.x0.clone()).collect();
    let psi0 = SampledPath::new(ctx.dim, times.clone(), flat0)?;
    let mut iterates = vec![constrain(&psi0)?];
    let mut sup_gaps = Vec::new();
    let mut converged = false;

    let mut scr = Scratch::new(ctx.dim, ctx.noise_dim);
    for _ in 0..n_iter {
        let prev = iterates.last().unwrap();
        let mut flat = Vec::with_capacity((ctx.steps + 1) * ctx.dim);
        let mut acc = ctx.x0.clone();
        flat.extend_from_slice(&acc);
        for (k, &t) in times.iter().enumerate().take(ctx.steps) {
            let xk = prev.value(k);
            ctx.drift.eval_into(t, xk, &mut scr.drift);
            ctx.diffusion.eval_into(t, xk, &mut scr.diffusion);
            let dw = noise.increment(k);
            for (i, a) in acc.iter_mut().enumerate() {
                let mut inc = scr.drift[i] * ctx.dt;
                let row = &scr.diffusion[i * ctx.noise_dim..(i + 1) * ctx.noise_dim];
                for (s, w) in row.iter().zip(dw) {
                    inc += s * w;
                }
                *a += inc;
            }
            flat.extend_from_slice(&acc);
        }
        let psi = SampledPath::new(ctx.dim, times.clone(), flat)?;
        let next = constrain(&psi)?;
        let gap = (0..=ctx.steps)
            .map(|k| vecn::dist(next.value(k), prev.value(k)))
            .fold(0.0_f64, f64::max);
        iterates.push(next);
        sup_gaps.push(gap);
        if gap <= PICARD_GAP_TOL {
            converged = true;
            break;
        }
        let n = sup_gaps.len();
        if n >= 3 && sup_gaps[n - 1] >= sup_gaps[n - 2] && sup_gaps[n - 2] >= sup_gaps[n - 3] {
            return Err(Error::IterationDiverged { gaps: sup_gaps });
        }
    }
    Ok(PicardRecord {
        iterates,
        sup_gaps,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Coupled contraction experiment
// ---------------------------------------------------------------------------

/// Two-start coupled ensemble summary: `lhs` is the mean of the squared
/// sup distance between the coupled paths over the whole horizon,
/// `rhs_integral` the time integral of the mean running squared sup, and
/// `fitted_c = lhs / (|Δx0|² + rhs_integral)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionRecord {
    pub lhs: f64,
    pub rhs_integral: f64,
    pub fitted_c: f64,
    pub pairs: usize,
    pub pairs_failed: usize,
}

/// Run pathwise-coupled ensembles from two start points on shared noise
/// and estimate the stability inequality's two sides. Identical starts
/// couple exactly (lhs = 0); the fitted constant is then reported as 0.
pub fn contraction_experiment(
    cfg: &SdeConfig,
    x0a: &[f64],
    x0b: &[f64],
    domain: &DomainSpec,
    field: &ReflectionField,
) -> Result<ContractionRecord> {
    let mut cfg_a = cfg.clone();
    cfg_a.x0 = x0a.to_vec();
    let mut cfg_b = cfg.clone();
    cfg_b.x0 = x0b.to_vec();
    let ctx_a = SimContext::new(&cfg_a, domain, field)?;
    let ctx_b = SimContext::new(&cfg_b, domain, field)?;
    let nodes = ctx_a.steps + 1;
    let times: Vec<f64> = (0..nodes).map(|k| ctx_a.node_time(k)).collect();

    struct Partial {
        running_sum: Vec<f64>,
        lhs_sum: f64,
        used: usize,
        failed: usize,
    }
    let indices: Vec<usize> = (0..cfg.paths).collect();
    let partials: Vec<Partial> = indices
        .par_chunks(PAIR_CHUNK)
        .map(|chunk| {
            let mut part = Partial {
                running_sum: vec![0.0; nodes],
                lhs_sum: 0.0,
                used: 0,
                failed: 0,
            };
            let mut running = vec![0.0; nodes];
            for &p in chunk {
                // Lockstep advance on shared noise: same (seed, path,
                // step) keys on both legs.
                let mut xa = ctx_a.x0.clone();
                let mut xb = ctx_b.x0.clone();
                running[0] = vecn::dist_sq(&xa, &xb);
                let mut ok = true;
                let mut scr_a = Scratch::new(ctx_a.dim, ctx_a.noise_dim);
                let mut scr_b = Scratch::new(ctx_b.dim, ctx_b.noise_dim);
                let mut dw = vec![0.0; ctx_a.noise_dim];
                let mut target = vec![0.0; ctx_a.dim];
                let mut lam_inc = vec![0.0; ctx_a.dim];
                for k in 0..ctx_a.steps {
                    let t0 = times[k];
                    let t1 = times[k + 1];
                    ctx_a.fill_increments(p as u64, k as u64, &mut dw);
                    let mut leg = |ctx: &SimContext, x: &mut Vec<f64>, scr: &mut Scratch| {
                        ctx.euler_target(t0, x, &dw, &mut target, scr);
                        match ctx.correct_segment(t0, t1, x, &target, &mut lam_inc, scr) {
                            Ok(_) => {
                                for i in 0..ctx.dim {
                                    x[i] = target[i] + lam_inc[i];
                                }
                                true
                            }
                            Err(_) => false,
                        }
                    };
                    if !(leg(&ctx_a, &mut xa, &mut scr_a) && leg(&ctx_b, &mut xb, &mut scr_b)) {
                        ok = false;
                        break;
                    }
                    running[k + 1] = running[k].max(vecn::dist_sq(&xa, &xb));
                }
                if ok {
                    for (acc, r) in part.running_sum.iter_mut().zip(&running) {
                        *acc += r;
                    }
                    part.lhs_sum += running[nodes - 1];
                    part.used += 1;
                } else {
                    part.failed += 1;
                }
            }
            part
        })
        .collect();

    let mut running_sum = vec![0.0; nodes];
    let mut lhs_sum = 0.0;
    let mut used = 0usize;
    let mut failed = 0usize;
    for part in partials {
        for (acc, r) in running_sum.iter_mut().zip(&part.running_sum) {
            *acc += r;
        }
        lhs_sum += part.lhs_sum;
        used += part.used;
        failed += part.failed;
    }
    if used == 0 {
        return Err(Error::EmptyEnsemble { paths: cfg.paths });
    }
    let lhs = lhs_sum / used as f64;
    let mean_running: Vec<f64> = running_sum.iter().map(|s| s / used as f64).collect();
    let mut rhs_integral = 0.0;
    for (m, t) in mean_running.windows(2).zip(times.windows(2)) {
        rhs_integral += 0.5 * (m[0] + m[1]) * (t[1] - t[0]);
    }
    let start_gap_sq = vecn::dist_sq(x0a, x0b);
    let denom = start_gap_sq + rhs_integral;
    let fitted_c = if lhs == 0.0 { 0.0 } else { lhs / denom };
    Ok(ContractionRecord {
        lhs,
        rhs_integral,
        fitted_c,
        pairs: used,
        pairs_failed: failed,
    })
}

// ---------------------------------------------------------------------------
// Ensemble validation
// ---------------------------------------------------------------------------

/// Score an ensemble against the defining trajectory properties:
/// containment of the state, pushing aligned with the direction field,
/// and coherent variation bookkeeping. Property failures are failing
/// rows; malformed inputs are errors.
pub fn validate_ensemble(
    ens: &ReflectedEnsemble,
    domain: &DomainSpec,
    field: &ReflectionField,
    boundary_tol: f64,
    direction_tol_deg: f64,
) -> Result<PropertyReport> {
    if !(boundary_tol.is_finite() && boundary_tol > 0.0)
        || !(direction_tol_deg.is_finite() && direction_tol_deg > 0.0)
    {
        return Err(Error::invalid("validation tolerances must be positive"));
    }
    if ens.trajectories.is_empty() {
        return Err(Error::EmptyEnsemble {
            paths: ens.failures.len(),
        });
    }
    let mut report = PropertyReport::new(format!("rsde/{}", subject_name(domain, field)));

    // Containment of the corrected state at every node.
    let mut worst_sd = f64::NEG_INFINITY;
    let mut nodes_checked = 0usize;
    for traj in &ens.trajectories {
        if traj.x.nodes() != traj.lambda.nodes() || traj.tv.len() != traj.x.nodes() {
            return Err(Error::invalid(
                "trajectory state, pushing record, and variation grids disagree",
            ));
        }
        for (k, &t) in traj.x.times().iter().enumerate() {
            worst_sd = worst_sd.max(domain.signed_distance(t, traj.x.value(k))?);
            nodes_checked += 1;
        }
    }
    report.push(CheckRow::new(
        "containment",
        worst_sd <= boundary_tol,
        nodes_checked,
        worst_sd.max(0.0),
    ));

    // Pushing increments must align with the direction field at the node
    // they land on. Increments below the dust floor are bookkeeping noise.
    let dim = ens.trajectories[0].x.dim();
    let mut max_inc = 0.0_f64;
    for traj in &ens.trajectories {
        for k in 0..traj.lambda.nodes() - 1 {
            let a = traj.lambda.value(k);
            let b = traj.lambda.value(k + 1);
            let inc: f64 = (0..dim).map(|i| (b[i] - a[i]).powi(2)).sum::<f64>().sqrt();
            max_inc = max_inc.max(inc);
        }
    }
    let dust = 1e-12 * (1.0 + max_inc);
    let mut worst_angle = 0.0_f64;
    let mut pushes = 0usize;
    let mut inc = vec![0.0; dim];
    for traj in &ens.trajectories {
        for k in 0..traj.lambda.nodes() - 1 {
            let a = traj.lambda.value(k);
            let b = traj.lambda.value(k + 1);
            for i in 0..dim {
                inc[i] = b[i] - a[i];
            }
            if vecn::norm(&inc) <= dust {
                continue;
            }
            pushes += 1;
            let t1 = traj.x.times()[k + 1];
            let angle = match field.gamma(domain, t1, traj.x.value(k + 1)) {
                Ok(gamma) => vecn::angle_deg(&inc, &gamma),
                Err(_) => 180.0,
            };
            worst_angle = worst_angle.max(angle);
        }
    }
    report.push(CheckRow::new(
        "pushing-direction",
        worst_angle <= direction_tol_deg,
        pushes,
        worst_angle,
    ));

    // Variation bookkeeping: running totals start at zero, never
    // decrease, stay finite, and dominate the net increment they cover.
    let mut worst_tv = 0.0_f64;
    let mut segments = 0usize;
    let mut finite = true;
    for traj in &ens.trajectories {
        finite &= traj.tv.iter().all(|v| v.is_finite());
        worst_tv = worst_tv.max(traj.tv[0].abs());
        let slack = 1e-12 * (1.0 + traj.tv.last().unwrap());
        for k in 0..traj.tv.len() - 1 {
            segments += 1;
            let spent = traj.tv[k + 1] - traj.tv[k];
            let a = traj.lambda.value(k);
            let b = traj.lambda.value(k + 1);
            let net: f64 = (0..dim).map(|i| (b[i] - a[i]).powi(2)).sum::<f64>().sqrt();
            worst_tv = worst_tv.max(-spent).max(net - spent - slack);
        }
    }
    report.push(CheckRow::new(
        "pushing-variation",
        finite && worst_tv <= 0.0,
        segments,
        worst_tv,
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    fn interval(left: Motion, right: Motion, horizon: f64) -> DomainSpec {
        DomainSpec::new(horizon, Shape::MovingInterval { left, right }).unwrap()
    }

    fn static_interval(a: f64, b: f64, horizon: f64) -> DomainSpec {
        interval(Motion::constant(a), Motion::constant(b), horizon)
    }

    fn normal_field() -> ReflectionField {
        ReflectionField::inward_normal(0.05).unwrap()
    }

    fn frozen_cfg(x0: Vec<f64>) -> SdeConfig {
        SdeConfig {
            drift: Coefficient::Constant { value: vec![0.0] },
            drift_lipschitz: 0.0,
            diffusion: Coefficient::Constant { value: vec![0.0] },
            diffusion_lipschitz: 0.0,
            x0,
            steps: 50,
            paths: 3,
            seed: 7,
            noise_dim: 1,
        }
    }

    #[test]
    fn interior_frozen_paths_stay_put_bitwise() {
        let domain = static_interval(-1.0, 1.0, 1.0);
        let field = normal_field();
        let cfg = frozen_cfg(vec![0.25]);
        let ens = simulate_reflected(&cfg, &domain, &field).unwrap();
        assert_eq!(ens.trajectories.len(), 3);
        assert!(ens.failures.is_empty());
        for traj in &ens.trajectories {
            assert!(traj.x.values_flat().iter().all(|&v| v == 0.25));
            assert!(traj.lambda.values_flat().iter().all(|&v| v == 0.0));
            assert!(traj.tv.iter().all(|&v| v == 0.0));
        }
        let report = validate_ensemble(&ens, &domain, &field, 1e-3, 2.0).unwrap();
        assert!(report.all_passed(), "{}", report.to_json());

        let one = mc_expectation(&cfg, &domain, &field, &Payoff::Constant { value: 1.0 }).unwrap();
        assert_eq!(one.mean, 1.0);
        assert_eq!(one.stderr, 0.0);
        let coord =
            mc_expectation(&cfg, &domain, &field, &Payoff::Coordinate { index: 0 }).unwrap();
        assert_eq!(coord.mean, 0.25);
        assert_eq!(coord.stderr, 0.0);
    }

    #[test]
    fn advancing_wall_drags_the_state() {
        // Left wall t ↦ t overtakes a frozen particle started on it: the
        // constrained state must ride the wall, X(t) = Λ(t) = t.
        let domain = interval(
            Motion::Linear {
                value0: 0.0,
                rate: 1.0,
            },
            Motion::Linear {
                value0: 2.0,
                rate: 1.0,
            },
            1.0,
        );
        let field = normal_field();
        let mut cfg = frozen_cfg(vec![0.0]);
        cfg.steps = 200;
        cfg.paths = 1;
        let ens = simulate_reflected(&cfg, &domain, &field).unwrap();
        assert!(ens.failures.is_empty());
        let traj = &ens.trajectories[0];
        for (k, &t) in traj.x.times().iter().enumerate() {
            assert!(
                (traj.x.value(k)[0] - t).abs() <= 1e-3,
                "state strays from the wall at t = {t}"
            );
            assert!((traj.lambda.value(k)[0] - t).abs() <= 1e-3);
        }
        let total = traj.tv.last().unwrap();
        assert!((total - 1.0).abs() <= 2e-3, "variation {total}");
        let report = validate_ensemble(&ens, &domain, &field, 1e-3, 2.0).unwrap();
        assert!(report.all_passed(), "{}", report.to_json());
    }

    #[test]
    fn reflected_brownian_matches_the_folded_mean() {
        // Driftless unit-noise motion reflected at a static wall at 0 has
        // E X(1) = √(2/π); on a step grid the sampled minimum undershoots
        // the true one by 0.5826·√Δt in mean, so the discrete scheme must
        // land near the correspondingly shifted value.
        let domain = static_interval(0.0, 6.0, 1.0);
        let field = normal_field();
        let cfg = SdeConfig {
            drift: Coefficient::Constant { value: vec![0.0] },
            drift_lipschitz: 0.0,
            diffusion: Coefficient::Constant { value: vec![1.0] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.0],
            steps: 500,
            paths: 4000,
            seed: 11,
            noise_dim: 1,
        };
        let record =
            mc_expectation(&cfg, &domain, &field, &Payoff::Coordinate { index: 0 }).unwrap();
        assert_eq!(record.paths_failed, 0);
        let dt = 1.0_f64 / 500.0;
        let expected = (2.0 / std::f64::consts::PI).sqrt() - 0.5826 * dt.sqrt();
        assert!(
            (record.mean - expected).abs() <= 0.02,
            "mean {} vs grid-corrected folded mean {expected}",
            record.mean
        );
        assert!(record.stderr > 0.0 && record.stderr < 0.02);

        // Ensemble-size scaling of the standard error: doubling the paths
        // shrinks it by √2 within 10%.
        let mut small = cfg.clone();
        small.paths = 1000;
        let mut big = cfg.clone();
        big.paths = 2000;
        let s = mc_expectation(&small, &domain, &field, &Payoff::Coordinate { index: 0 }).unwrap();
        let b = mc_expectation(&big, &domain, &field, &Payoff::Coordinate { index: 0 }).unwrap();
        let ratio = s.stderr / b.stderr;
        assert!(
            (ratio - std::f64::consts::SQRT_2).abs() <= 0.1 * std::f64::consts::SQRT_2,
            "stderr ratio {ratio}"
        );

        // The constrained ensemble validates.
        let mut tiny = cfg.clone();
        tiny.paths = 50;
        tiny.steps = 300;
        let ens = simulate_reflected(&tiny, &domain, &field).unwrap();
        assert!(ens.failures.is_empty());
        let report = validate_ensemble(&ens, &domain, &field, 1e-3, 2.0).unwrap();
        assert!(report.all_passed(), "{}", report.to_json());
    }

    #[test]
    fn pushing_budget_is_stable_under_step_doubling() {
        let domain = static_interval(0.0, 6.0, 1.0);
        let field = normal_field();
        let mut cfg = SdeConfig {
            drift: Coefficient::Constant { value: vec![0.0] },
            drift_lipschitz: 0.0,
            diffusion: Coefficient::Constant { value: vec![1.0] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.0],
            steps: 250,
            paths: 400,
            seed: 13,
            noise_dim: 1,
        };
        let (coarse, cf) = pushing_totals(&cfg, &domain, &field).unwrap();
        cfg.steps = 500;
        let (fine, ff) = pushing_totals(&cfg, &domain, &field).unwrap();
        assert!(cf.is_empty() && ff.is_empty());
        let pct = |mut v: Vec<f64>| -> f64 {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[((0.99 * v.len() as f64).ceil() as usize - 1).min(v.len() - 1)]
        };
        let (pc, pf) = (pct(coarse), pct(fine));
        let ratio = pf / pc;
        assert!(
            (1.0 / 1.5..=1.5).contains(&ratio),
            "99th percentile moved {pc} -> {pf} under step doubling"
        );
    }

    #[test]
    fn ensembles_are_reproducible_and_replayable() {
        let domain = static_interval(-1.0, 1.0, 0.5);
        let field = normal_field();
        let cfg = SdeConfig {
            drift: Coefficient::Affine {
                offset: vec![0.0],
                gain: vec![-1.0],
            },
            drift_lipschitz: 1.0,
            diffusion: Coefficient::Constant { value: vec![0.5] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.3],
            steps: 64,
            paths: 2,
            seed: 21,
            noise_dim: 1,
        };
        let a = simulate_reflected(&cfg, &domain, &field).unwrap();
        let b = simulate_reflected(&cfg, &domain, &field).unwrap();
        assert_eq!(a, b);
        let traj = &a.trajectories[0];
        assert_eq!(traj.noise.steps(), 64);
        assert_eq!(traj.noise.noise_dim(), 1);
        assert!(traj.tv.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn fixed_point_iteration_contracts_to_the_euler_path() {
        let domain = static_interval(-1.0, 1.0, 0.5);
        let field = normal_field();
        let cfg = SdeConfig {
            drift: Coefficient::Affine {
                offset: vec![0.0],
                gain: vec![-1.0],
            },
            drift_lipschitz: 1.0,
            diffusion: Coefficient::Constant { value: vec![0.2] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.3],
            steps: 2000,
            paths: 1,
            seed: 2,
            noise_dim: 1,
        };
        let ens = simulate_reflected(&cfg, &domain, &field).unwrap();
        let traj = &ens.trajectories[0];
        let record = picard_solve(&cfg, &domain, &field, &traj.noise, 8).unwrap();
        assert!(record.converged, "gaps {:?}", record.sup_gaps);
        assert!(*record.sup_gaps.last().unwrap() <= PICARD_GAP_TOL);
        // Contraction in action: strictly decaying gaps from the second
        // iteration on.
        for w in record.sup_gaps.windows(2).skip(1) {
            assert!(w[1] < w[0], "gaps {:?}", record.sup_gaps);
        }
        // The converged fixed point and the stepwise-corrected path are
        // the same object on this noise.
        let fixed = record.iterates.last().unwrap();
        let gap = (0..=cfg.steps)
            .map(|k| (fixed.value(k)[0] - traj.x.value(k)[0]).abs())
            .fold(0.0_f64, f64::max);
        assert!(gap <= 1e-3, "fixed point vs stepwise path gap {gap}");
        // Same noise, same record, bitwise.
        let again = picard_solve(&cfg, &domain, &field, &traj.noise, 8).unwrap();
        assert_eq!(record, again);
    }

    #[test]
    fn frozen_coefficients_converge_in_one_iteration() {
        let domain = static_interval(-1.0, 1.0, 0.5);
        let field = normal_field();
        let mut cfg = frozen_cfg(vec![0.25]);
        cfg.steps = 32;
        let noise = NoiseTable::new(0.5, 1, vec![0.0; 32]).unwrap();
        let record = picard_solve(&cfg, &domain, &field, &noise, 8).unwrap();
        assert!(record.converged);
        assert_eq!(record.iterates.len(), 2);
        assert_eq!(record.sup_gaps, vec![0.0]);
    }

    #[test]
    fn coupled_starts_contract_deterministically() {
        // Frozen coefficients: coupled paths are parallel constants, so
        // every piece of the stability record has a closed form.
        let domain = static_interval(-1.0, 1.0, 0.5);
        let field = normal_field();
        let mut cfg = frozen_cfg(vec![0.0]);
        cfg.paths = 4;
        let rec = contraction_experiment(&cfg, &[0.2], &[-0.2], &domain, &field).unwrap();
        let gap_sq = 0.4 * 0.4;
        assert!((rec.lhs - gap_sq).abs() <= 1e-15);
        // fitted_c = g²/(g² + g²·T) = 1/(1 + T).
        assert!(
            (rec.fitted_c - 1.0 / 1.5).abs() <= 1e-12,
            "{}",
            rec.fitted_c
        );
        // Halving the start gap quarter-scales the left side exactly.
        let half = contraction_experiment(&cfg, &[0.2], &[0.0], &domain, &field).unwrap();
        assert!((rec.lhs / half.lhs - 4.0).abs() <= 1e-12);
        // Identical starts couple exactly.
        let same = contraction_experiment(&cfg, &[0.1], &[0.1], &domain, &field).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert_eq!(same.fitted_c, 0.0);
        assert_eq!(same.rhs_integral, 0.0);
    }

    #[test]
    fn contraction_constant_is_stable_across_ensemble_sizes() {
        let domain = static_interval(-1.0, 1.0, 0.5);
        let field = normal_field();
        let mut cfg = SdeConfig {
            drift: Coefficient::Affine {
                offset: vec![0.0],
                gain: vec![-1.0],
            },
            drift_lipschitz: 1.0,
            diffusion: Coefficient::Constant { value: vec![0.2] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.2],
            steps: 200,
            paths: 250,
            seed: 3,
            noise_dim: 1,
        };
        let small = contraction_experiment(&cfg, &[0.2], &[0.1], &domain, &field).unwrap();
        cfg.paths = 1000;
        let big = contraction_experiment(&cfg, &[0.2], &[0.1], &domain, &field).unwrap();
        assert!(small.fitted_c.is_finite() && small.fitted_c > 0.0);
        let ratio = small.fitted_c / big.fitted_c;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "fitted constant moved {} -> {} across ensemble sizes",
            small.fitted_c,
            big.fitted_c
        );
    }

    #[test]
    fn declared_lipschitz_constants_are_audited() {
        let domain = static_interval(-1.0, 1.0, 1.0);
        let mut cfg = frozen_cfg(vec![0.0]);
        cfg.drift = Coefficient::Affine {
            offset: vec![0.0],
            gain: vec![-2.0],
        };
        cfg.drift_lipschitz = 1.0;
        let err = cfg.validate(&domain).unwrap_err();
        assert!(
            err.to_string().contains("Lipschitz"),
            "unexpected error: {err}"
        );
        cfg.drift_lipschitz = 2.0;
        cfg.validate(&domain).unwrap();

        // The bounded table is audited through its actual slopes.
        cfg.drift = Coefficient::SmoothTable {
            knots: vec![-1.0, 0.0, 1.0],
            values: vec![-1.0, 0.0, 1.0],
        };
        cfg.drift_lipschitz = 0.3;
        assert!(cfg.validate(&domain).is_err());
        cfg.drift_lipschitz = 1.2;
        cfg.validate(&domain).unwrap();
    }

    #[test]
    fn outward_fields_exclude_paths_without_retry() {
        // A field pointing out of the left wall cannot restore the
        // constraint once drift presses the state into it.
        let domain = static_interval(0.0, 2.0, 1.0);
        let field = ReflectionField::constant_oblique(vec![-1.0]).unwrap();
        let cfg = SdeConfig {
            drift: Coefficient::Constant { value: vec![-1.5] },
            drift_lipschitz: 0.0,
            diffusion: Coefficient::Constant { value: vec![0.0] },
            diffusion_lipschitz: 0.0,
            x0: vec![0.5],
            steps: 100,
            paths: 3,
            seed: 5,
            noise_dim: 1,
        };
        let ens = simulate_reflected(&cfg, &domain, &field).unwrap();
        assert!(ens.trajectories.is_empty());
        assert_eq!(ens.failures.len(), 3);
        for f in &ens.failures {
            assert!(
                (0.30..=0.40).contains(&f.t),
                "failure at t = {} (expected near first wall contact)",
                f.t
            );
            assert!(f.reason.contains("does not reduce"), "{}", f.reason);
        }
        match mc_expectation(&cfg, &domain, &field, &Payoff::Constant { value: 1.0 }) {
            Err(Error::EmptyEnsemble { paths: 3 }) => {}
            other => panic!("expected an empty-ensemble error, got {other:?}"),
        }
    }

    #[test]
    fn configuration_rejects_malformed_inputs() {
        let domain = static_interval(-1.0, 1.0, 1.0);
        let field = normal_field();
        let good = frozen_cfg(vec![0.0]);
        good.validate(&domain).unwrap();

        let mut bad = good.clone();
        bad.x0 = vec![3.0];
        assert!(matches!(
            bad.validate(&domain),
            Err(Error::StartsOutside { .. })
        ));
        bad = good.clone();
        bad.x0 = vec![0.0, 0.0];
        assert!(matches!(
            bad.validate(&domain),
            Err(Error::DimensionMismatch { .. })
        ));
        bad = good.clone();
        bad.steps = 0;
        assert!(bad.validate(&domain).is_err());
        bad = good.clone();
        bad.noise_dim = 0;
        assert!(bad.validate(&domain).is_err());
        bad = good.clone();
        bad.diffusion = Coefficient::Constant {
            value: vec![1.0, 2.0],
        };
        assert!(bad.validate(&domain).is_err());
        bad = good.clone();
        bad.paths = 100_000;
        bad.steps = 100_000;
        assert!(simulate_reflected(&bad, &domain, &field).is_err());

        // Payoffs are validated against the section dimension.
        assert!(mc_expectation(&good, &domain, &field, &Payoff::Coordinate { index: 3 }).is_err());

        // Configurations round-trip through serialization unchanged.
        let json = serde_json::to_string(&good).unwrap();
        let back: SdeConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(good, back);
    }

    #[test]
    fn ensemble_validator_flags_planted_defects() {
        let domain = interval(
            Motion::Linear {
                value0: 0.0,
                rate: 1.0,
            },
            Motion::Linear {
                value0: 2.0,
                rate: 1.0,
            },
            1.0,
        );
        let field = normal_field();
        let mut cfg = frozen_cfg(vec![0.0]);
        cfg.steps = 100;
        cfg.paths = 1;
        let clean = simulate_reflected(&cfg, &domain, &field).unwrap();
        assert!(validate_ensemble(&clean, &domain, &field, 1e-3, 2.0)
            .unwrap()
            .all_passed());

        // A state node pulled outside the wall breaks containment.
        let mut dented = clean.clone();
        dented.trajectories[0].x.value_mut(40)[0] -= 0.1;
        let report = validate_ensemble(&dented, &domain, &field, 1e-3, 2.0).unwrap();
        assert!(!report.row("containment").unwrap().passed);

        // A pushing increment bent against the field breaks alignment.
        let mut bent = clean.clone();
        bent.trajectories[0].lambda.value_mut(60)[0] += 0.05;
        let report = validate_ensemble(&bent, &domain, &field, 1e-3, 2.0).unwrap();
        assert!(!report.row("pushing-direction").unwrap().passed);
    }
}
