//! Quadratic-growth direction gauge `g(ξ, p) = |p|²·f(⟨p,ξ⟩/|p|)` with
//! analytic first and second derivative blocks in both arguments.

use super::TestFunctionParams;
use crate::error::{Error, Result};
use crate::vecn;

/// Value and derivative blocks of `g` at one point. Matrix blocks are
/// row-major `n×n`; `hess_xi_p[i*n + j] = ∂²g/∂ξ_i∂p_j`.
#[derive(Clone, Debug)]
pub struct GBlocks {
    pub value: f64,
    pub grad_xi: Vec<f64>,
    pub grad_p: Vec<f64>,
    pub hess_pp: Vec<f64>,
    pub hess_xi_p: Vec<f64>,
    pub hess_xi_xi: Vec<f64>,
}

/// Evaluate `g` and its blocks. `xi` must be a unit vector (within 1e-9);
/// `p` is unrestricted. At `p = 0` the value and both gradients vanish
/// (the function is C¹ there); the reported `hess_pp` is the band-limit
/// convention `2c(I − ξξᵀ)`, the two mixed blocks are zero.
pub fn eval_g(params: &TestFunctionParams, xi: &[f64], p: &[f64]) -> Result<GBlocks> {
    if (vecn::norm(xi) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("gauge direction must be a unit vector"));
    }
    if xi.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            got: p.len(),
        });
    }
    Ok(eval_g_raw(params, xi, p))
}

/// Unchecked evaluator, mathematically defined for any `ξ` (the direction
/// cosine just ranges over `[−|ξ|, |ξ|]`). Finite-difference validation
/// in `ξ` needs the off-sphere extension, so it lives here.
pub(crate) fn eval_g_raw(params: &TestFunctionParams, xi: &[f64], p: &[f64]) -> GBlocks {
    let n = xi.len();
    let c = params.band_constant;
    let r = vecn::norm(p);
    if r < 1e-300 {
        let mut hess_pp = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess_pp[i * n + j] = 2.0 * c * (f64::from(u8::from(i == j)) - xi[i] * xi[j]);
            }
        }
        return GBlocks {
            value: 0.0,
            grad_xi: vec![0.0; n],
            grad_p: vec![0.0; n],
            hess_pp,
            hess_xi_p: vec![0.0; n * n],
            hess_xi_xi: vec![0.0; n * n],
        };
    }
    let s = vecn::dot(p, xi);
    let u = s / r;
    if u.abs() <= params.profile.theta() {
        // On the band the composite collapses to the exact quadratic
        // c(|p|² − ⟨p,ξ⟩²); evaluating that form keeps the radial
        // identity ⟨∇_p g, ξ⟩ = 0 exact in floating point.
        let value = c * (r * r - s * s);
        let grad_p: Vec<f64> = p
            .iter()
            .zip(xi)
            .map(|(pi, xii)| 2.0 * c * (pi - s * xii))
            .collect();
        let grad_xi: Vec<f64> = p.iter().map(|pi| -2.0 * c * s * pi).collect();
        let mut hess_pp = vec![0.0; n * n];
        let mut hess_xi_p = vec![0.0; n * n];
        let mut hess_xi_xi = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let id = f64::from(u8::from(i == j));
                hess_pp[i * n + j] = 2.0 * c * (id - xi[i] * xi[j]);
                hess_xi_p[i * n + j] = -2.0 * c * (p[i] * xi[j] + s * id);
                hess_xi_xi[i * n + j] = -2.0 * c * p[i] * p[j];
            }
        }
        return GBlocks {
            value,
            grad_xi,
            grad_p,
            hess_pp,
            hess_xi_p,
            hess_xi_xi,
        };
    }

    // Off the band: general chain rule through u = ⟨p,ξ⟩/|p| with the
    // profile derivatives. q = p/r; a = ∂u/∂p = (ξ − u·q)/r.
    let (f, fd, fdd) = params.profile.eval(u);
    let q: Vec<f64> = p.iter().map(|pi| pi / r).collect();
    let a_vec: Vec<f64> = xi
        .iter()
        .zip(&q)
        .map(|(xii, qi)| (xii - u * qi) / r)
        .collect();
    let value = r * r * f;

    // grad_p = a·q + b·ξ with a = 2rf − r·u·f′, b = r·f′.
    let coeff_q = 2.0 * r * f - r * u * fd;
    let coeff_xi = r * fd;
    let grad_p: Vec<f64> = q
        .iter()
        .zip(xi)
        .map(|(qi, xii)| coeff_q * qi + coeff_xi * xii)
        .collect();
    // grad_ξ = r²·f′·q = r·f′·p.
    let grad_xi: Vec<f64> = p.iter().map(|pi| r * fd * pi).collect();

    // ∇_p(coeff_q) = (2f − u f′)·q + r(f′ − u f″)·a;
    // ∇_p(coeff_xi) = f′·q + r f″·a.
    let dq_scalar = 2.0 * f - u * fd;
    let da_scalar = r * (fd - u * fdd);
    let mut hess_pp = vec![0.0; n * n];
    let mut hess_xi_p = vec![0.0; n * n];
    let mut hess_xi_xi = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let id = f64::from(u8::from(i == j));
            let grad_coeff_q_j = dq_scalar * q[j] + da_scalar * a_vec[j];
            let grad_coeff_xi_j = fd * q[j] + r * fdd * a_vec[j];
            hess_pp[i * n + j] =
                q[i] * grad_coeff_q_j + coeff_q * (id - q[i] * q[j]) / r + xi[i] * grad_coeff_xi_j;
            // ∂²g/∂ξ_i∂p_j from grad_ξ = r f′ p:
            hess_xi_p[i * n + j] = p[i] * (fd * q[j] + r * fdd * a_vec[j]) + r * fd * id;
            hess_xi_xi[i * n + j] = r * r * fdd * q[i] * q[j];
        }
    }
    // The analytic assembly of hess_pp is symmetric up to rounding;
    // symmetrize so downstream eigen checks see an exactly symmetric block.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (hess_pp[i * n + j] + hess_pp[j * n + i]);
            hess_pp[i * n + j] = m;
            hess_pp[j * n + i] = m;
        }
    }
    GBlocks {
        value,
        grad_xi,
        grad_p,
        hess_pp,
        hess_xi_p,
        hess_xi_xi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn params() -> TestFunctionParams {
        TestFunctionParams::default()
    }

    #[test]
    fn zero_momentum_is_an_exact_zero() {
        let prm = params();
        let out = eval_g(&prm, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grad_p, vec![0.0, 0.0]);
        assert_eq!(out.grad_xi, vec![0.0, 0.0]);
    }

    #[test]
    fn orthogonal_momentum_gives_the_band_constant() {
        let prm = params();
        let out = eval_g(&prm, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(out.value, 1.0);
        let out = eval_g(&prm, &[1.0, 0.0], &[0.0, 2.0]).unwrap();
        assert_eq!(out.value, 4.0);
    }

    #[test]
    fn band_radial_identity_is_exact() {
        let prm = params();
        let xi = [1.0, 0.0];
        // u = 0.3/|p| ≤ θ = 0.5 for these picks.
        for p in [[0.3, 1.0], [-0.2, 0.7], [0.1, -0.9]] {
            let out = eval_g(&prm, &xi, &p).unwrap();
            let radial = vecn::dot(&out.grad_p, &xi);
            assert_eq!(radial, 0.0, "band radial derivative must cancel exactly");
        }
    }

    #[test]
    fn radial_sign_flips_across_the_band() {
        let prm = params();
        let xi = [1.0, 0.0];
        // Aligned momentum (u = 1): outward radial derivative.
        let out = eval_g(&prm, &xi, &[2.0, 0.0]).unwrap();
        assert!(vecn::dot(&out.grad_p, &xi) > 0.0);
        // Anti-aligned (u = −1): inward.
        let out = eval_g(&prm, &xi, &[-2.0, 0.0]).unwrap();
        assert!(vecn::dot(&out.grad_p, &xi) < 0.0);
    }

    #[test]
    fn lower_bound_holds_with_the_plateau_constant() {
        let prm = params();
        let chi = prm.chi();
        for k in 0..500 {
            let ang = std::f64::consts::TAU * rng::uniform(7, k, 0, 0);
            let mag = 10f64.powf(-2.0 + 4.0 * rng::uniform(7, k, 0, 1));
            let p = [mag * ang.cos(), mag * ang.sin()];
            let out = eval_g(&prm, &[1.0, 0.0], &p).unwrap();
            assert!(out.value >= chi * mag * mag - 1e-12 * (1.0 + mag * mag));
        }
    }

    #[test]
    fn quadratic_homogeneity_in_momentum() {
        let prm = params();
        let xi = [0.6, 0.8];
        let p = [0.9, -0.4];
        let p3 = [2.7, -1.2000000000000002];
        let g1 = eval_g(&prm, &xi, &p).unwrap();
        let g3 = eval_g(&prm, &xi, &p3).unwrap();
        assert!((g3.value - 9.0 * g1.value).abs() < 1e-12 * (1.0 + g3.value.abs()));
    }

    #[test]
    fn unit_sphere_precondition_is_enforced() {
        let prm = params();
        assert!(eval_g(&prm, &[1.1, 0.0], &[1.0, 0.0]).is_err());
        assert!(eval_g(&prm, &[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn derivative_blocks_match_finite_differences() {
        let prm = params();
        let step = 1e-6;
        let mut worst = 0.0f64;
        for k in 0..60u64 {
            let ang = std::f64::consts::TAU * rng::uniform(11, k, 0, 0);
            let xi = [ang.cos(), ang.sin()];
            let pang = std::f64::consts::TAU * rng::uniform(11, k, 0, 1);
            let mag = 10f64.powf(-1.0 + 2.0 * rng::uniform(11, k, 0, 2));
            let p = [mag * pang.cos(), mag * pang.sin()];
            // Skip samples whose direction cosine sits within FD reach of
            // the two profile seams, where third derivatives jump.
            let u = vecn::dot(&p, &xi) / mag;
            if (u.abs() - 0.5).abs() < 1e-2 || (u.abs() - 0.7).abs() < 1e-2 {
                continue;
            }
            let base = eval_g_raw(&prm, &xi, &p);
            for var in 0..2 {
                for comp in 0..2 {
                    let mut hp = [xi, p];
                    let mut hm = [xi, p];
                    let h = step * (1.0 + mag);
                    hp[var][comp] += h;
                    hm[var][comp] -= h;
                    let gp = eval_g_raw(&prm, &hp[0], &hp[1]);
                    let gm = eval_g_raw(&prm, &hm[0], &hm[1]);
                    let fd_grad = (gp.value - gm.value) / (2.0 * h);
                    let analytic = if var == 0 {
                        base.grad_xi[comp]
                    } else {
                        base.grad_p[comp]
                    };
                    worst = worst.max((fd_grad - analytic).abs() / (1.0 + analytic.abs()));
                    // Second blocks: difference the analytic gradients.
                    for row in 0..2 {
                        let (fd_xi, fd_p) = (
                            (gp.grad_xi[row] - gm.grad_xi[row]) / (2.0 * h),
                            (gp.grad_p[row] - gm.grad_p[row]) / (2.0 * h),
                        );
                        // Perturbing ξ_comp: d(grad_ξ[row]) is the ξξ block,
                        // d(grad_p[row]) is ∂²g/∂ξ_comp∂p_row. Perturbing
                        // p_comp: d(grad_ξ[row]) is ∂²g/∂ξ_row∂p_comp.
                        let (ana_xi, ana_p) = if var == 0 {
                            (
                                base.hess_xi_xi[row * 2 + comp],
                                base.hess_xi_p[comp * 2 + row],
                            )
                        } else {
                            (base.hess_xi_p[row * 2 + comp], base.hess_pp[row * 2 + comp])
                        };
                        worst = worst.max((fd_xi - ana_xi).abs() / (1.0 + ana_xi.abs()));
                        worst = worst.max((fd_p - ana_p).abs() / (1.0 + ana_p.abs()));
                    }
                }
            }
        }
        assert!(worst < 1e-5, "finite-difference mismatch {worst}");
    }
}
