//! Small dense vector/matrix helpers for n ≤ 4.
//!
//! Points and directions live in ℝⁿ with n ∈ {1, 2}; doubled-variable
//! Hessian blocks reach 4×4. Everything here operates on plain slices in
//! row-major order, which keeps the hot loops allocation-free.

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean distance between two points.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `out += s * a`.
pub fn axpy(out: &mut [f64], s: f64, a: &[f64]) {
    debug_assert_eq!(out.len(), a.len());
    for (o, x) in out.iter_mut().zip(a) {
        *o += s * x;
    }
}

/// Normalize `a` in place; returns the original norm. Leaves `a` untouched
/// when its norm underflows the given floor.
pub fn normalize(a: &mut [f64], floor: f64) -> f64 {
    let n = norm(a);
    if n > floor {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let c = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

/// Dense row-major matrix-vector product: `out = m · v` with `m` of shape
/// `rows × v.len()`.
pub fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    debug_assert_eq!(m.len(), out.len() * cols);
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * cols..(i + 1) * cols], v);
    }
}

/// Largest eigenvalue of a symmetric `n×n` matrix (row-major), n ≤ 8.
///
/// Cyclic Jacobi rotations; this is the dense symmetric reference used by
/// the matrix-inequality checks (2n ≤ 4 there), not a general-purpose
/// eigensolver.
pub fn sym_eig_max(a: &[f64], n: usize) -> f64 {
    *symmetric_eigenvalues(a, n).last().expect("n >= 1 required")
}

/// All eigenvalues of a symmetric `n×n` matrix, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    let mut m = a.to_vec();
    // Cyclic Jacobi: annihilate the largest off-diagonal entries until the
    // off-diagonal mass is negligible relative to the matrix scale.
    let scale = m
        .iter()
        .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j].abs();
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_norm_basics() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dist(&[1.0, 1.0], &[4.0, 5.0]), 5.0);
    }

    #[test]
    fn angle_between_axes_is_ninety() {
        let a = [1.0, 0.0];
        let b = [0.0, 2.0];
        assert!((angle_deg(&a, &b) - 90.0).abs() < 1e-12);
        assert!(angle_deg(&a, &a) < 1e-6);
        assert!((angle_deg(&a, &[-3.0, 0.0]) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_known_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues {1, 3}.
        let eig = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_known_four_by_four() {
        // diag(1,2,3,4) + outer(v, v) with v = (1,1,1,1)/2 shifts the trace
        // by 1; check against eigenvalues computed from the secular equation
        // f(x) = 1 + (1/4)·Σ 1/(d_i − x) = 0, frozen to 12 digits.
        let v = [0.5, 0.5, 0.5, 0.5];
        let mut a = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                a[i * 4 + j] = v[i] * v[j];
            }
            a[i * 4 + i] += (i + 1) as f64;
        }
        let eig = symmetric_eigenvalues(&a, 4);
        let expected = [
            1.164_105_544_266_53,
            2.201_012_263_253_96,
            3.245_300_269_041_91,
            4.389_581_923_437_59,
        ];
        for (e, x) in eig.iter().zip(expected) {
            assert!((e - x).abs() < 1e-10, "got {e}, want {x}");
        }
        let s: f64 = eig.iter().sum();
        assert!((s - 11.0).abs() < 1e-12, "trace must be preserved");
    }

    #[test]
    fn sym_eig_max_of_coupling_block() {
        // [[I,−I],[−I,I]] in 2n = 4 has eigenvalues {0,0,2,2}.
        #[rustfmt::skip]
        let j = [
            1.0, 0.0, -1.0, 0.0,
            0.0, 1.0, 0.0, -1.0,
            -1.0, 0.0, 1.0, 0.0,
            0.0, -1.0, 0.0, 1.0,
        ];
        assert!((sym_eig_max(&j, 4) - 2.0).abs() < 1e-12);
        let eig = symmetric_eigenvalues(&j, 4);
        assert!(eig[0].abs() < 1e-12 && eig[1].abs() < 1e-12);
    }
}
