//! Keyed counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, path, step, slot)` — there is no
//! mutable generator state, so simulations can be sharded across any number
//! of workers (or replayed for a single path) and still produce bit-identical
//! streams. Mixing is the splitmix64 finalizer applied to the key words with
//! distinct odd multipliers, which keeps distinct roles of the words from
//! aliasing (swapping `path` and `step` changes the output).

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse the four key words into one well-mixed 64-bit value.
#[inline]
fn key(seed: u64, path: u64, step: u64, slot: u64) -> u64 {
    let mut h = mix64(seed ^ 0x5851_f42d_4c95_7f2d);
    h = mix64(h.wrapping_add(path.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    h = mix64(h.wrapping_add(step.wrapping_mul(0xbf58_476d_1ce4_e5b9)));
    h = mix64(h.wrapping_add(slot.wrapping_mul(0x94d0_49bb_1331_11eb)));
    h
}

/// Uniform draw in the open interval (0, 1).
///
/// The top 53 bits of the mixed key are centered into the unit interval;
/// the result is never exactly 0 or 1, so it is safe under `ln`.
#[inline]
pub fn uniform(seed: u64, path: u64, step: u64, slot: u64) -> f64 {
    ((key(seed, path, step, slot) >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw via the Box–Muller cosine branch.
///
/// Slot `s` consumes the uniform slots `2s` and `2s + 1`, so independent
/// normal slots never share uniforms.
#[inline]
pub fn standard_normal(seed: u64, path: u64, step: u64, slot: u64) -> f64 {
    let u1 = uniform(seed, path, step, 2 * slot);
    let u2 = uniform(seed, path, step, 2 * slot + 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fill `out` with independent standard normals for one `(path, step)` cell.
#[inline]
pub fn fill_standard_normals(seed: u64, path: u64, step: u64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = standard_normal(seed, path, step, j as u64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_key_sensitive() {
        let a = standard_normal(7, 11, 13, 0);
        assert_eq!(a, standard_normal(7, 11, 13, 0));
        // Changing any single key word changes the draw.
        assert_ne!(a, standard_normal(8, 11, 13, 0));
        assert_ne!(a, standard_normal(7, 12, 13, 0));
        assert_ne!(a, standard_normal(7, 11, 14, 0));
        assert_ne!(a, standard_normal(7, 11, 13, 1));
        // Role words must not alias.
        assert_ne!(standard_normal(7, 11, 13, 0), standard_normal(7, 13, 11, 0));
    }

    #[test]
    fn uniforms_stay_strictly_inside_unit_interval() {
        for k in 0..10_000u64 {
            let u = uniform(1, k, 0, 0);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments_match_at_fixed_seed() {
        // Seeded, hence deterministic: these bounds are frozen facts about
        // seed 42, not statistical hopes.
        let n = 200_000u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut sum_lag = 0.0;
        let mut prev = 0.0;
        for i in 0..n {
            let z = standard_normal(42, i / 1000, i % 1000, 0);
            sum += z;
            sum_sq += z * z;
            if i > 0 {
                sum_lag += z * prev;
            }
            prev = z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let lag = sum_lag / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
        assert!(lag.abs() < 0.01, "lag-1 correlation {lag}");
    }

    #[test]
    fn tail_mass_is_plausible() {
        // P(|Z| > 2) ≈ 0.0455; at 1e5 seeded draws the frequency is frozen.
        let n = 100_000u64;
        let c = (0..n)
            .filter(|&i| standard_normal(9, i, 0, 0).abs() > 2.0)
            .count();
        let f = c as f64 / n as f64;
        assert!((f - 0.0455).abs() < 0.005, "two-sigma tail freq {f}");
    }
}
