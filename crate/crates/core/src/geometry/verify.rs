//! Empirical verification of the geometric assumptions: cone inclusions,
//! temporal regularity, distance function laws, and the mollified
//! inward-rate inequality, all sampled with a seeded budget.

use super::{ConeCertificate, DomainSpec, Mollifier, ReflectionField};
use crate::error::Result;
use crate::fit;
use crate::report::{CheckRow, PropertyReport};
use crate::rng;
use crate::vecn;
use serde::{Deserialize, Serialize};

/// Sampling budget for [`verify_assumptions`]. The default examines
/// 16 × 64 = 1024 boundary samples plus 10⁴ spatial pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBudget {
    /// Time nodes across the horizon.
    pub times: usize,
    /// Boundary points sampled per time node.
    pub boundary_points: usize,
    /// Random point pairs for the spatial Lipschitz row.
    pub pair_samples: usize,
    /// Cone depths ζ sampled per boundary point (geometric grid down from ρ).
    pub zeta_samples: usize,
    /// Mollification width β; defaults to a tenth of the least inradius.
    pub mollifier_width: Option<f64>,
    pub seed: u64,
}

impl Default for VerifyBudget {
    fn default() -> Self {
        VerifyBudget {
            times: 16,
            boundary_points: 64,
            pair_samples: 10_000,
            zeta_samples: 12,
            mollifier_width: None,
            seed: 2026,
        }
    }
}

/// Purpose codes keeping the seeded draws of different rows independent.
mod stream {
    pub const BOUNDARY_JITTER: u64 = 1;
    pub const PAIRS: u64 = 2;
    pub const HOLDER: u64 = 3;
    pub const CONE_PAIRS: u64 = 4;
    pub const INTERIOR: u64 = 5;
}

/// Run every geometric check for a domain–field pair against the declared
/// certificate. Failures are report rows, never errors; an `Err` from this
/// function means evaluation itself broke (wrong dimensions, degenerate
/// field point), not that an assumption is violated.
pub fn verify_assumptions(
    domain: &DomainSpec,
    field: &ReflectionField,
    cert: &ConeCertificate,
    budget: &VerifyBudget,
) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new(subject_name(domain, field));
    let times = time_grid(domain, budget.times.max(2));
    let beta = budget
        .mollifier_width
        .unwrap_or_else(|| domain.suggested_mollifier_width());

    rep.push(unit_length_row(domain, field, budget, &times)?);
    rep.push(jet_consistency_row(domain, field, budget, &times)?);
    rep.push(exterior_cone_row(domain, field, cert, budget, &times)?);
    rep.push(interior_cone_row(domain, field, cert, budget, &times)?);
    rep.push(cone_pairs_row(domain, field, cert, budget, &times)?);
    rep.push(certificate_consistency_row(cert));
    rep.push(temporal_holder_row(domain, cert, budget)?);
    rep.push(distance_zero_inside_row(domain, budget, &times)?);
    rep.push(distance_outward_consistency_row(domain, budget, &times)?);
    rep.push(lipschitz_space_row(domain, budget)?);
    rep.push(mollified_bias_row(domain, budget, &times, beta)?);
    rep.push(mollified_inward_rate_row(
        domain, field, budget, &times, beta,
    )?);
    if let ReflectionField::RotatedNormal { angle_rad, .. } = field {
        rep.push(rotation_margin_row(*angle_rad, cert));
    }
    Ok(rep)
}

pub(crate) fn subject_name(domain: &DomainSpec, field: &ReflectionField) -> String {
    let shape = match domain.shape() {
        super::Shape::MovingInterval { .. } => "moving_interval",
        super::Shape::MovingDisk { .. } => "moving_disk",
        super::Shape::MovingScaledPolygon { .. } => "moving_scaled_polygon",
    };
    let f = match field {
        ReflectionField::ConstantOblique { .. } => "constant_oblique",
        ReflectionField::InwardNormalSmoothed { .. } => "inward_normal_smoothed",
        ReflectionField::RotatedNormal { .. } => "rotated_normal",
    };
    format!("{shape}+{f}")
}

fn time_grid(domain: &DomainSpec, nodes: usize) -> Vec<f64> {
    let t_max = domain.horizon();
    (0..nodes)
        .map(|k| t_max * k as f64 / (nodes - 1) as f64)
        .collect()
}

/// Stratified jittered boundary parameters for one time node.
fn boundary_params(budget: &VerifyBudget, t_index: usize) -> Vec<f64> {
    let nb = budget.boundary_points.max(4);
    (0..nb)
        .map(|j| {
            let jitter = rng::uniform(
                budget.seed,
                t_index as u64,
                stream::BOUNDARY_JITTER,
                j as u64,
            );
            (j as f64 + jitter) / nb as f64
        })
        .collect()
}

fn unit_length_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut samples = 0;
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k) {
            let x = domain.boundary_point(t, u)?;
            let g = field.gamma(domain, t, &x)?;
            worst = worst.max((vecn::norm(&g) - 1.0).abs());
            samples += 1;
        }
    }
    Ok(
        CheckRow::new("direction-unit-length", worst <= 1e-12, samples, worst)
            .with_note("max | |γ| − 1 | over boundary samples; tolerance 1e-12"),
    )
}

fn jet_consistency_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let n = domain.dim();
    let mut worst_first: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    let mut samples = 0;
    let ht = 1e-6 * (1.0 + domain.horizon());
    // Sample a thinned boundary set; compare analytic blocks against
    // central differences of γ values.
    for (k, &t) in times.iter().enumerate().step_by(2) {
        let t = t.clamp(ht, domain.horizon() - ht);
        for u in boundary_params(budget, k).into_iter().step_by(8) {
            let x = domain.boundary_point(t, u)?;
            let jet = field.gamma_jet(domain, t, &x)?;
            samples += 1;
            let gp = field.gamma(domain, t + ht, &x)?;
            let gm = field.gamma(domain, t - ht, &x)?;
            for a in 0..n {
                let fd = (gp[a] - gm[a]) / (2.0 * ht);
                worst_first = worst_first.max((jet.dt[a] - fd).abs() / (1.0 + fd.abs()));
            }
            let hx = 1e-6 * (1.0 + vecn::norm(&x));
            for b in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[b] += hx;
                xm[b] -= hx;
                let gp = field.gamma(domain, t, &xp)?;
                let gm = field.gamma(domain, t, &xm)?;
                for a in 0..n {
                    let fd = (gp[a] - gm[a]) / (2.0 * hx);
                    worst_first = worst_first.max((jet.dx_at(a, b) - fd).abs() / (1.0 + fd.abs()));
                }
            }
            let hs = 2e-4 * (1.0 + vecn::norm(&x));
            for b in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[b] += hs;
                xm[b] -= hs;
                let gp = field.gamma(domain, t, &xp)?;
                let gm = field.gamma(domain, t, &xm)?;
                let g0 = field.gamma(domain, t, &x)?;
                for a in 0..n {
                    let fd = (gp[a] - 2.0 * g0[a] + gm[a]) / (hs * hs);
                    worst_second =
                        worst_second.max((jet.dxx_at(a, b, b) - fd).abs() / (1.0 + fd.abs()));
                }
            }
        }
    }
    let passed = worst_first <= 1e-6 && worst_second <= 1e-3;
    Ok(CheckRow::new(
        "direction-jet-consistency",
        passed,
        samples,
        worst_first - 1e-6,
    )
    .with_fit("first_order_error", worst_first)
    .with_fit("second_order_error", worst_second)
    .with_note(
        "relative gap between analytic blocks and central differences; \
         first order ≤ 1e-6, second order ≤ 1e-3 (difference truncation)",
    ))
}

/// Geometric grid of cone depths ζ = ρ·2^{−k}.
fn zeta_grid(rho: f64, count: usize) -> Vec<f64> {
    (0..count.max(2))
        .map(|k| rho * 0.5f64.powi(k as i32))
        .collect()
}

fn exterior_cone_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    cert: &ConeCertificate,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k) {
            let x = domain.boundary_point(t, u)?;
            let g = field.gamma(domain, t, &x)?;
            for &zeta in &zeta_grid(cert.rho, budget.zeta_samples) {
                let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - zeta * gi).collect();
                // B(x − ζγ, ζρ) avoids the closed section iff the center's
                // distance to it is at least the radius.
                let viol = zeta * cert.rho - domain.distance(t, &y)?;
                worst = worst.max(viol);
                samples += 1;
            }
        }
    }
    Ok(
        CheckRow::new("exterior-cone", worst <= 1e-9, samples, worst)
            .with_fit("rho", cert.rho)
            .with_note("worst ζρ − d(t, x − ζγ) over boundary samples; tolerance 1e-9"),
    )
}

fn interior_cone_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    cert: &ConeCertificate,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k) {
            let x = domain.boundary_point(t, u)?;
            let g = field.gamma(domain, t, &x)?;
            for &zeta in &zeta_grid(cert.rho, budget.zeta_samples) {
                let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + zeta * gi).collect();
                // B(x + ζγ, ζρ) stays in the closure iff the center sits at
                // inside-depth ≥ ζρ, i.e. signed distance ≤ −ζρ.
                let viol = zeta * cert.rho + domain.signed_distance(t, &y)?;
                worst = worst.max(viol);
                samples += 1;
            }
        }
    }
    Ok(
        CheckRow::new("interior-cone", worst <= 1e-9, samples, worst)
            .with_fit("rho", cert.rho)
            .with_note(
                "worst ζρ + signed_distance(t, x + ζγ); the mirrored cone the \
             exterior condition induces for regular fields; tolerance 1e-9",
            ),
    )
}

fn cone_pairs_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    cert: &ConeCertificate,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let n = domain.dim();
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (k, &t) in times.iter().enumerate() {
        for (j, u) in boundary_params(budget, k).into_iter().enumerate() {
            let x = domain.boundary_point(t, u)?;
            let g = field.gamma(domain, t, &x)?;
            // Interior partners within the locality radius, rejection-kept.
            for attempt in 0..8u64 {
                let id = (k * budget.boundary_points + j) as u64;
                let r = cert.delta * rng::uniform(budget.seed, id, stream::CONE_PAIRS, 2 * attempt);
                let mut dir = vec![0.0; n];
                if n == 1 {
                    dir[0] = if rng::uniform(budget.seed, id, stream::CONE_PAIRS, 2 * attempt + 1)
                        < 0.5
                    {
                        -1.0
                    } else {
                        1.0
                    };
                } else {
                    let a = std::f64::consts::TAU
                        * rng::uniform(budget.seed, id, stream::CONE_PAIRS, 2 * attempt + 1);
                    dir[0] = a.cos();
                    dir[1] = a.sin();
                }
                let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + r * di).collect();
                if domain.signed_distance(t, &y)? > 1e-12 {
                    continue;
                }
                let diff: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi - xi).collect();
                let viol = -(vecn::dot(&diff, &g) + cert.theta * vecn::norm(&diff));
                worst = worst.max(viol);
                samples += 1;
            }
        }
    }
    Ok(
        CheckRow::new("interior-cone-pairs", worst <= 1e-9, samples, worst)
            .with_fit("theta", cert.theta)
            .with_fit("delta", cert.delta)
            .with_note(
                "worst −⟨y−x, γ(t,x)⟩ − θ|y−x| over boundary x and interior y \
                 with |y−x| ≤ δ; tolerance 1e-9",
            ),
    )
}

fn certificate_consistency_row(cert: &ConeCertificate) -> CheckRow {
    let viol = -cert.obliqueness_margin();
    CheckRow::new("certificate-consistency", viol < 0.0, 1, viol)
        .with_fit("margin", cert.obliqueness_margin())
        .with_note(
            "θ² − (1 − ρ²) must be positive; the cone opening is treated as a \
             single constant over the horizon",
        )
}

fn temporal_holder_row(
    domain: &DomainSpec,
    cert: &ConeCertificate,
    budget: &VerifyBudget,
) -> Result<CheckRow> {
    let t_max = domain.horizon();
    let (lo, hi) = domain.global_bounding_box();
    let n = domain.dim();
    // Spatial sup grid over the inflated sweep box.
    let per_axis = if n == 1 { 65 } else { 33 };
    let mut points = Vec::new();
    let inflate = 0.1;
    match n {
        1 => {
            for i in 0..per_axis {
                let s = i as f64 / (per_axis - 1) as f64;
                let w = hi[0] - lo[0];
                points.push(vec![lo[0] - inflate * w + s * w * (1.0 + 2.0 * inflate)]);
            }
        }
        _ => {
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let si = i as f64 / (per_axis - 1) as f64;
                    let sj = j as f64 / (per_axis - 1) as f64;
                    let w0 = hi[0] - lo[0];
                    let w1 = hi[1] - lo[1];
                    points.push(vec![
                        lo[0] - inflate * w0 + si * w0 * (1.0 + 2.0 * inflate),
                        lo[1] - inflate * w1 + sj * w1 * (1.0 + 2.0 * inflate),
                    ]);
                }
            }
        }
    }
    // Per-gap worst oscillation over sampled anchor times (the endpoints
    // are always included — rough motions are roughest near them).
    let mut gaps = Vec::new();
    let mut sups = Vec::new();
    let mut samples = 0;
    for k in 1..=10 {
        let gap = t_max * 0.5f64.powi(k);
        let mut sup: f64 = 0.0;
        let mut anchors = vec![0.0, t_max - gap];
        for a in 0..6u64 {
            anchors.push((t_max - gap) * rng::uniform(budget.seed, k as u64, stream::HOLDER, a));
        }
        for s in anchors {
            for x in &points {
                let d0 = domain.distance(s, x)?;
                let d1 = domain.distance(s + gap, x)?;
                sup = sup.max((d1 - d0).abs());
                samples += 1;
            }
        }
        gaps.push(gap);
        sups.push(sup);
    }
    let active: Vec<(f64, f64)> = gaps
        .iter()
        .zip(&sups)
        .filter(|(_, s)| **s > 1e-13)
        .map(|(g, s)| (*g, *s))
        .collect();
    if active.len() < 3 {
        return Ok(
            CheckRow::new("temporal-holder", true, samples, -1.0).with_note(
                "sections are (numerically) static: no measurable temporal \
             oscillation of the distance at any sampled gap",
            ),
        );
    }
    let xs: Vec<f64> = active.iter().map(|(g, _)| *g).collect();
    let ys: Vec<f64> = active.iter().map(|(_, s)| *s).collect();
    let slope = fit::log_log_slope(&xs, &ys)?;
    let k_fit = active
        .iter()
        .map(|(g, s)| s / g.sqrt())
        .fold(0.0f64, f64::max);
    let viol = (0.45 - slope).max(k_fit - 1.05 * cert.holder_k);
    Ok(CheckRow::new("temporal-holder", viol <= 0.0, samples, viol)
        .with_fit("exponent", slope)
        .with_fit("constant", k_fit)
        .with_note(
            "log-log fit of per-gap sup_x |d(s+Δ,x) − d(s,x)| vs Δ; requires \
             exponent ≥ 0.45 and constant ≤ 1.05·declared K",
        ))
}

/// Rejection-sample a point of the open section at time `t`.
fn interior_sample(
    domain: &DomainSpec,
    t: f64,
    budget: &VerifyBudget,
    id: u64,
) -> Result<Vec<f64>> {
    let (lo, hi) = domain.bounding_box(t)?;
    let n = domain.dim();
    for attempt in 0..64u64 {
        let mut x = vec![0.0; n];
        for a in 0..n {
            let u = rng::uniform(budget.seed, id, stream::INTERIOR, attempt * 4 + a as u64);
            x[a] = lo[a] + u * (hi[a] - lo[a]);
        }
        if domain.signed_distance(t, &x)? < -1e-9 {
            return Ok(x);
        }
    }
    domain.interior_anchor(t)
}

fn distance_zero_inside_row(
    domain: &DomainSpec,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (k, &t) in times.iter().enumerate() {
        for j in 0..budget.boundary_points.max(4) {
            let x = interior_sample(domain, t, budget, (k * 1000 + j) as u64)?;
            worst = worst.max(domain.distance(t, &x)?);
            samples += 1;
        }
    }
    Ok(
        CheckRow::new("distance-zero-inside", worst <= 0.0, samples, worst)
            .with_note("distance must vanish identically on sampled interior points"),
    )
}

fn distance_outward_consistency_row(
    domain: &DomainSpec,
    budget: &VerifyBudget,
    times: &[f64],
) -> Result<CheckRow> {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    let radii = [1e-3, 1e-2, 0.1, 0.5];
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k) {
            let x = domain.boundary_point(t, u)?;
            let g = domain.signed_distance_gradient(t, &x)?;
            for r in radii {
                let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + r * gi).collect();
                // Convex sections: stepping off the boundary along the
                // outward feature direction changes the distance by exactly
                // the step.
                let viol = (domain.distance(t, &y)? - r).abs();
                worst = worst.max(viol);
                samples += 1;
            }
        }
    }
    Ok(CheckRow::new(
        "distance-outward-consistency",
        worst <= 1e-12,
        samples,
        worst,
    )
    .with_note("|d(t, x + r·∇d) − r| on outward pushes from the boundary; tolerance 1e-12"))
}

fn lipschitz_space_row(domain: &DomainSpec, budget: &VerifyBudget) -> Result<CheckRow> {
    let (lo, hi) = domain.global_bounding_box();
    let n = domain.dim();
    let mut worst = f64::NEG_INFINITY;
    let samples = budget.pair_samples.max(100);
    for i in 0..samples {
        let t = domain.horizon() * rng::uniform(budget.seed, i as u64, stream::PAIRS, 0);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for a in 0..n {
            let w = (hi[a] - lo[a]).max(1e-9);
            let ua = rng::uniform(budget.seed, i as u64, stream::PAIRS, 1 + a as u64);
            let ub = rng::uniform(budget.seed, i as u64, stream::PAIRS, 3 + a as u64);
            x[a] = lo[a] - 0.5 * w + 2.0 * w * ua;
            y[a] = lo[a] - 0.5 * w + 2.0 * w * ub;
        }
        let dd = (domain.distance(t, &x)? - domain.distance(t, &y)?).abs();
        worst = worst.max(dd - vecn::dist(&x, &y));
    }
    Ok(
        CheckRow::new("lipschitz-space", worst <= 1e-12, samples, worst)
            .with_note("|d(t,x) − d(t,y)| − |x − y| on random pairs; tolerance 1e-12"),
    )
}

fn mollified_bias_row(
    domain: &DomainSpec,
    budget: &VerifyBudget,
    times: &[f64],
    beta: f64,
) -> Result<CheckRow> {
    let m = Mollifier::new(beta)?;
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    let radii = [
        -1.5 * beta,
        -0.5 * beta,
        0.0,
        0.5 * beta,
        1.5 * beta,
        3.0 * beta,
    ];
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k).into_iter().step_by(4) {
            let x = domain.boundary_point(t, u)?;
            let g = domain.signed_distance_gradient(t, &x)?;
            for r in radii {
                let y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + r * gi).collect();
                let d = domain.distance(t, &y)?;
                let out = m.mollified_distance(domain, t, &y)?;
                worst = worst.max((out.d_smooth - d).abs() - beta);
                samples += 1;
            }
        }
    }
    Ok(
        CheckRow::new("mollified-bias", worst <= 1e-12, samples, worst)
            .with_fit("beta", beta)
            .with_note("|d_β − d| − β near the boundary; the Lipschitz bound is exact"),
    )
}

fn mollified_inward_rate_row(
    domain: &DomainSpec,
    field: &ReflectionField,
    budget: &VerifyBudget,
    times: &[f64],
    beta: f64,
) -> Result<CheckRow> {
    let m = Mollifier::new(beta)?;
    let mut kappa = f64::INFINITY;
    let mut samples = 0;
    // Exterior tube 0 < d ≤ 2β, where the inward-rate inequality is claimed.
    let radii: Vec<f64> = (0..8).map(|k| 2.0 * beta * 0.6f64.powi(k)).collect();
    for (k, &t) in times.iter().enumerate() {
        for u in boundary_params(budget, k).into_iter().step_by(2) {
            let x = domain.boundary_point(t, u)?;
            let n_out = domain.signed_distance_gradient(t, &x)?;
            for &r in &radii {
                let y: Vec<f64> = x.iter().zip(&n_out).map(|(xi, gi)| xi + r * gi).collect();
                let g = field.gamma(domain, t, &y)?;
                let out = m.mollified_distance(domain, t, &y)?;
                if out.d_smooth < 1e-14 {
                    continue;
                }
                kappa = kappa.min(-vecn::dot(&out.grad_v, &g) / out.d_smooth);
                samples += 1;
            }
        }
    }
    let (passed, worst) = if samples == 0 {
        (false, f64::INFINITY)
    } else {
        (kappa > 0.0, -kappa)
    };
    Ok(
        CheckRow::new("mollified-inward-rate", passed, samples, worst)
            .with_fit("kappa", if kappa.is_finite() { kappa } else { 0.0 })
            .with_fit("beta", beta)
            .with_note(
                "empirical κ = min −⟨∇v_β, γ⟩/d_β over exterior points with \
             d ≤ 2β; the inward-rate inequality needs κ > 0",
            ),
    )
}

fn rotation_margin_row(angle_rad: f64, cert: &ConeCertificate) -> CheckRow {
    let viol = angle_rad.abs() - cert.rho.asin();
    CheckRow::new("rotation-margin", viol < 0.0, 1, viol)
        .with_fit("angle", angle_rad)
        .with_fit("limit", cert.rho.asin())
        .with_note("|rotation| must stay below arcsin(ρ)")
}
