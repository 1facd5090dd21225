//! Clamped gauge `h(t,x,p) = ν(g(γ(t,x), p))` and the doubled-variable
//! family `w_ε(t,x,y) = ε·h(t, x, (x−y)/ε)`, with analytic blocks.

use super::gfun::eval_g_raw;
use super::TestFunctionParams;
use crate::error::Result;
use crate::geometry::{DomainSpec, ReflectionField};

/// Derivative blocks of `h`. Matrices are row-major `n×n`;
/// `hess_xp[i*n + j] = ∂²h/∂x_i∂p_j`.
#[derive(Clone, Debug)]
pub struct HBlocks {
    pub value: f64,
    pub dt: f64,
    pub grad_x: Vec<f64>,
    pub grad_p: Vec<f64>,
    pub hess_xx: Vec<f64>,
    pub hess_xp: Vec<f64>,
    pub hess_pp: Vec<f64>,
}

/// Derivative blocks of `w_ε`. `hess_xy[i*n + j] = ∂²w/∂x_i∂y_j`; the full
/// doubled Hessian is `[[xx, xy], [xyᵀ, yy]]`.
#[derive(Clone, Debug)]
pub struct WBlocks {
    pub value: f64,
    pub dt: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub hess_xx: Vec<f64>,
    pub hess_xy: Vec<f64>,
    pub hess_yy: Vec<f64>,
}

impl WBlocks {
    /// Assemble the symmetric `2n×2n` Hessian in the doubled variable.
    pub fn doubled_hessian(&self) -> Vec<f64> {
        let n = self.grad_x.len();
        let m = 2 * n;
        let mut full = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                full[i * m + j] = self.hess_xx[i * n + j];
                full[i * m + (n + j)] = self.hess_xy[i * n + j];
                full[(n + i) * m + j] = self.hess_xy[j * n + i];
                full[(n + i) * m + (n + j)] = self.hess_yy[i * n + j];
            }
        }
        full
    }
}

/// Evaluate `h` at `(t, x, p)`. The direction enters through the field's
/// jet, so the point must lie in the field's admissible region.
pub fn eval_h(
    params: &TestFunctionParams,
    field: &ReflectionField,
    domain: &DomainSpec,
    t: f64,
    x: &[f64],
    p: &[f64],
) -> Result<HBlocks> {
    let jet = field.gamma_jet(domain, t, x)?;
    let n = x.len();
    let g = eval_g_raw(params, &jet.value, p);
    let (value, nd, ndd) = params.clamp.eval(g.value);

    // Chain-rule contractions of the gauge's ξ-blocks with the field jet.
    let mut gx = vec![0.0; n];
    let mut gt = 0.0;
    for a in 0..n {
        gt += jet.dt[a] * g.grad_xi[a];
        for (i, gxi) in gx.iter_mut().enumerate() {
            *gxi += jet.dx_at(a, i) * g.grad_xi[a];
        }
    }

    let dt = nd * gt;
    let grad_x: Vec<f64> = gx.iter().map(|v| nd * v).collect();
    let grad_p: Vec<f64> = g.grad_p.iter().map(|v| nd * v).collect();

    let mut hess_pp = vec![0.0; n * n];
    let mut hess_xp = vec![0.0; n * n];
    let mut hess_xx = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            hess_pp[i * n + j] = ndd * g.grad_p[i] * g.grad_p[j] + nd * g.hess_pp[i * n + j];
            let mut mixed = 0.0;
            for a in 0..n {
                mixed += jet.dx_at(a, i) * g.hess_xi_p[a * n + j];
            }
            hess_xp[i * n + j] = ndd * gx[i] * g.grad_p[j] + nd * mixed;
            let mut curve = 0.0;
            for a in 0..n {
                curve += g.grad_xi[a] * jet.dxx_at(a, i, j);
                for b in 0..n {
                    curve += jet.dx_at(a, i) * g.hess_xi_xi[a * n + b] * jet.dx_at(b, j);
                }
            }
            hess_xx[i * n + j] = ndd * gx[i] * gx[j] + nd * curve;
        }
    }
    // Symmetrize xx against accumulated rounding asymmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (hess_xx[i * n + j] + hess_xx[j * n + i]);
            hess_xx[i * n + j] = m;
            hess_xx[j * n + i] = m;
        }
    }
    Ok(HBlocks {
        value,
        dt,
        grad_x,
        grad_p,
        hess_xx,
        hess_xp,
        hess_pp,
    })
}

/// Evaluate `w_ε(t,x,y) = ε·h(t,x,(x−y)/ε)` and its blocks.
pub fn eval_w_eps(
    params: &TestFunctionParams,
    field: &ReflectionField,
    domain: &DomainSpec,
    t: f64,
    x: &[f64],
    y: &[f64],
    eps: f64,
) -> Result<WBlocks> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(crate::error::Error::invalid(
            "doubling parameter epsilon must be positive",
        ));
    }
    let n = x.len();
    let p: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| (xi - yi) / eps).collect();
    let h = eval_h(params, field, domain, t, x, &p)?;

    let value = eps * h.value;
    let dt = eps * h.dt;
    let grad_x: Vec<f64> = h
        .grad_x
        .iter()
        .zip(&h.grad_p)
        .map(|(hx, hp)| eps * hx + hp)
        .collect();
    let grad_y: Vec<f64> = h.grad_p.iter().map(|hp| -hp).collect();

    let mut hess_xx = vec![0.0; n * n];
    let mut hess_xy = vec![0.0; n * n];
    let mut hess_yy = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            hess_xx[i * n + j] = eps * h.hess_xx[i * n + j]
                + h.hess_xp[i * n + j]
                + h.hess_xp[j * n + i]
                + h.hess_pp[i * n + j] / eps;
            hess_xy[i * n + j] = -h.hess_xp[i * n + j] - h.hess_pp[i * n + j] / eps;
            hess_yy[i * n + j] = h.hess_pp[i * n + j] / eps;
        }
    }
    Ok(WBlocks {
        value,
        dt,
        grad_x,
        grad_y,
        hess_xx,
        hess_xy,
        hess_yy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::motion::Motion;
    use crate::rng;
    use crate::vecn;

    fn disk_setup() -> (DomainSpec, ReflectionField, TestFunctionParams) {
        let domain = DomainSpec::new(
            1.0,
            Shape::MovingDisk {
                center: [
                    Motion::Linear {
                        value0: 0.0,
                        rate: 0.2,
                    },
                    Motion::constant(0.0),
                ],
                radius: Motion::Linear {
                    value0: 1.0,
                    rate: -0.2,
                },
            },
        )
        .unwrap();
        let field = ReflectionField::rotated_normal(0.3, 1e-3).unwrap();
        (domain, field, TestFunctionParams::default())
    }

    #[test]
    fn origin_value_is_one_with_flat_blocks() {
        let (domain, field, prm) = disk_setup();
        let h = eval_h(&prm, &field, &domain, 0.4, &[0.5, 0.1], &[0.0, 0.0]).unwrap();
        assert_eq!(h.value, 1.0);
        assert_eq!(h.dt, 0.0);
        assert!(h.grad_x.iter().all(|v| *v == 0.0));
        assert!(h.grad_p.iter().all(|v| *v == 0.0));
        assert!(h.hess_xx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn small_gauge_region_is_exactly_flat() {
        let (domain, field, prm) = disk_setup();
        // |p| = 0.5 puts g ≤ c·|p|² = 0.25 < 1/2, inside the clamp's
        // constant region.
        let h = eval_h(&prm, &field, &domain, 0.2, &[0.3, -0.2], &[0.3, 0.4]).unwrap();
        assert_eq!(h.value, 1.0);
        assert!(h.grad_p.iter().all(|v| *v == 0.0));
        assert!(h.hess_pp.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn large_gauge_region_reduces_to_the_gauge_itself() {
        let (domain, field, prm) = disk_setup();
        let t = 0.3;
        let x = [0.2, 0.4];
        let p = [0.0, 3.0];
        let jet = field.gamma_jet(&domain, t, &x).unwrap();
        let g = super::eval_g_raw(&prm, &jet.value, &p);
        assert!(g.value >= 1.5, "sample must sit in the identity region");
        let h = eval_h(&prm, &field, &domain, t, &x, &p).unwrap();
        assert_eq!(h.value, g.value);
        assert_eq!(h.grad_p, g.grad_p);
    }

    #[test]
    fn h_blocks_match_finite_differences() {
        let (domain, field, prm) = disk_setup();
        let mut worst = 0.0f64;
        let mut kept = 0;
        for k in 0..80u64 {
            let t = 0.1 + 0.8 * rng::uniform(21, k, 0, 0);
            let c0 = 0.2 * t;
            let ang = std::f64::consts::TAU * rng::uniform(21, k, 0, 1);
            let rad = 0.5 * (1.0 - 0.2 * t) * rng::uniform(21, k, 0, 2).sqrt();
            let x = [c0 + rad * ang.cos(), rad * ang.sin()];
            let pang = std::f64::consts::TAU * rng::uniform(21, k, 0, 3);
            let mag = 10f64.powf(-0.5 + 1.2 * rng::uniform(21, k, 0, 4));
            let p = [mag * pang.cos(), mag * pang.sin()];

            // Stay clear of the profile and clamp seams so the FD stencil
            // sees a C³ function.
            let jet = field.gamma_jet(&domain, t, &x).unwrap();
            let g = super::eval_g_raw(&prm, &jet.value, &p);
            let u = vecn::dot(&p, &jet.value) / mag;
            if (g.value - 0.5).abs() < 0.05
                || (g.value - 1.5).abs() < 0.05
                || (u.abs() - 0.5).abs() < 0.03
                || (u.abs() - 0.7).abs() < 0.03
            {
                continue;
            }
            kept += 1;
            let base = eval_h(&prm, &field, &domain, t, &x, &p).unwrap();

            let ht = 1e-6;
            let hp = eval_h(&prm, &field, &domain, t + ht, &x, &p).unwrap();
            let hm = eval_h(&prm, &field, &domain, t - ht, &x, &p).unwrap();
            let fd_t = (hp.value - hm.value) / (2.0 * ht);
            worst = worst.max((fd_t - base.dt).abs() / (1.0 + fd_t.abs()));

            let hstep = 1e-6 * (1.0 + mag);
            for comp in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[comp] += hstep;
                xm[comp] -= hstep;
                let fp = eval_h(&prm, &field, &domain, t, &xp, &p).unwrap();
                let fm = eval_h(&prm, &field, &domain, t, &xm, &p).unwrap();
                let fd = (fp.value - fm.value) / (2.0 * hstep);
                worst = worst.max((fd - base.grad_x[comp]).abs() / (1.0 + fd.abs()));
                for row in 0..2 {
                    let fd_gx = (fp.grad_x[row] - fm.grad_x[row]) / (2.0 * hstep);
                    worst = worst
                        .max((fd_gx - base.hess_xx[row * 2 + comp]).abs() / (1.0 + fd_gx.abs()));
                    let fd_gp = (fp.grad_p[row] - fm.grad_p[row]) / (2.0 * hstep);
                    worst = worst
                        .max((fd_gp - base.hess_xp[comp * 2 + row]).abs() / (1.0 + fd_gp.abs()));
                }

                let mut pp = p;
                let mut pm = p;
                pp[comp] += hstep;
                pm[comp] -= hstep;
                let fp = eval_h(&prm, &field, &domain, t, &x, &pp).unwrap();
                let fm = eval_h(&prm, &field, &domain, t, &x, &pm).unwrap();
                let fd = (fp.value - fm.value) / (2.0 * hstep);
                worst = worst.max((fd - base.grad_p[comp]).abs() / (1.0 + fd.abs()));
                for row in 0..2 {
                    let fd_pp = (fp.grad_p[row] - fm.grad_p[row]) / (2.0 * hstep);
                    worst = worst
                        .max((fd_pp - base.hess_pp[row * 2 + comp]).abs() / (1.0 + fd_pp.abs()));
                    let fd_px = (fp.grad_x[row] - fm.grad_x[row]) / (2.0 * hstep);
                    worst = worst
                        .max((fd_px - base.hess_xp[row * 2 + comp]).abs() / (1.0 + fd_px.abs()));
                }
            }
        }
        assert!(kept >= 30, "seam filter kept too few samples: {kept}");
        assert!(worst < 1e-5, "finite-difference mismatch {worst}");
    }

    #[test]
    fn diagonal_value_is_epsilon_exactly() {
        let (domain, field, prm) = disk_setup();
        for eps in [1.0, 0.1, 0.01] {
            let w = eval_w_eps(&prm, &field, &domain, 0.5, &[0.4, 0.2], &[0.4, 0.2], eps).unwrap();
            assert_eq!(w.value, eps);
            assert!(w.grad_x.iter().all(|v| *v == 0.0));
            assert!(w.grad_y.iter().all(|v| *v == 0.0));
        }
        assert!(eval_w_eps(&prm, &field, &domain, 0.5, &[0.4, 0.2], &[0.4, 0.2], 0.0).is_err());
    }

    #[test]
    fn w_blocks_match_finite_differences() {
        let (domain, field, prm) = disk_setup();
        let eps = 0.1;
        let t = 0.4;
        let x = [0.3, 0.25];
        let y = [0.2, 0.17];
        let base = eval_w_eps(&prm, &field, &domain, t, &x, &y, eps).unwrap();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for comp in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[comp] += h;
            xm[comp] -= h;
            let fp = eval_w_eps(&prm, &field, &domain, t, &xp, &y, eps).unwrap();
            let fm = eval_w_eps(&prm, &field, &domain, t, &xm, &y, eps).unwrap();
            let fd = (fp.value - fm.value) / (2.0 * h);
            worst = worst.max((fd - base.grad_x[comp]).abs() / (1.0 + fd.abs()));
            for row in 0..2 {
                let fd_xx = (fp.grad_x[row] - fm.grad_x[row]) / (2.0 * h);
                worst =
                    worst.max((fd_xx - base.hess_xx[row * 2 + comp]).abs() / (1.0 + fd_xx.abs()));
                let fd_yx = (fp.grad_y[row] - fm.grad_y[row]) / (2.0 * h);
                worst =
                    worst.max((fd_yx - base.hess_xy[comp * 2 + row]).abs() / (1.0 + fd_yx.abs()));
            }
            let mut yp = y;
            let mut ym = y;
            yp[comp] += h;
            ym[comp] -= h;
            let fp = eval_w_eps(&prm, &field, &domain, t, &x, &yp, eps).unwrap();
            let fm = eval_w_eps(&prm, &field, &domain, t, &x, &ym, eps).unwrap();
            let fd = (fp.value - fm.value) / (2.0 * h);
            worst = worst.max((fd - base.grad_y[comp]).abs() / (1.0 + fd.abs()));
            for row in 0..2 {
                let fd_yy = (fp.grad_y[row] - fm.grad_y[row]) / (2.0 * h);
                worst =
                    worst.max((fd_yy - base.hess_yy[row * 2 + comp]).abs() / (1.0 + fd_yy.abs()));
            }
        }
        let tp = eval_w_eps(&prm, &field, &domain, t + h, &x, &y, eps).unwrap();
        let tm = eval_w_eps(&prm, &field, &domain, t - h, &x, &y, eps).unwrap();
        let fd_t = (tp.value - tm.value) / (2.0 * h);
        worst = worst.max((fd_t - base.dt).abs() / (1.0 + fd_t.abs()));
        assert!(worst < 1e-5, "finite-difference mismatch {worst}");
    }

    #[test]
    fn doubled_hessian_is_symmetric() {
        let (domain, field, prm) = disk_setup();
        let w = eval_w_eps(&prm, &field, &domain, 0.4, &[0.35, 0.2], &[0.35, 0.1], 0.1).unwrap();
        let full = w.doubled_hessian();
        for i in 0..4 {
            for j in 0..4 {
                assert!((full[i * 4 + j] - full[j * 4 + i]).abs() < 1e-12);
            }
        }
    }
}
