//! Regression and window-statistics utilities.
//!
//! These back the empirical laws the toolkit measures: log-log rate slopes,
//! temporal Hölder fits, and modulus-of-continuity tables over dyadic
//! windows (computed with a sparse table so sliding-window extrema are
//! O(1) per query).

use crate::error::{Error, Result};

/// Ordinary least squares on `(x, y)` pairs → `(slope, intercept)`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::invalid("regression needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Log-log regression slope of `y` against `x` (both strictly positive).
/// Non-positive pairs are skipped; at least two must survive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y > 0.0 {
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    linear_regression(&lx, &ly).map(|(slope, _)| slope)
}

/// Sparse table answering range-min/range-max queries on a fixed series
/// in O(1) after O(N log N) preprocessing.
pub struct RangeExtrema {
    mins: Vec<Vec<f64>>,
    maxs: Vec<Vec<f64>>,
    len: usize,
}

impl RangeExtrema {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let levels = if n <= 1 {
            1
        } else {
            (usize::BITS - (n - 1).leading_zeros()) as usize + 1
        };
        let mut mins = Vec::with_capacity(levels);
        let mut maxs = Vec::with_capacity(levels);
        mins.push(values.to_vec());
        maxs.push(values.to_vec());
        let mut width = 1;
        for _ in 1..levels {
            let prev_min = mins.last().unwrap();
            let prev_max = maxs.last().unwrap();
            let span = 2 * width;
            if n < span {
                break;
            }
            let m = n - span + 1;
            let mut level_min = Vec::with_capacity(m);
            let mut level_max = Vec::with_capacity(m);
            for i in 0..m {
                level_min.push(prev_min[i].min(prev_min[i + width]));
                level_max.push(prev_max[i].max(prev_max[i + width]));
            }
            mins.push(level_min);
            maxs.push(level_max);
            width = span;
        }
        RangeExtrema { mins, maxs, len: n }
    }

    /// Max − min over the inclusive index window `[i, j]`.
    pub fn oscillation(&self, i: usize, j: usize) -> f64 {
        assert!(i <= j && j < self.len, "window out of range");
        let w = j - i + 1;
        let level = (usize::BITS - 1 - w.leading_zeros()) as usize;
        let width = 1usize << level;
        let hi = self.maxs[level][i].max(self.maxs[level][j + 1 - width]);
        let lo = self.mins[level][i].min(self.mins[level][j + 1 - width]);
        hi - lo
    }
}

/// One window of a modulus table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ModulusWindow {
    pub start: f64,
    pub end: f64,
    pub input_osc: f64,
    pub output_osc: f64,
    pub ratio: f64,
}

/// Fit the smallest `R` with
/// `osc(output) ≤ R · (osc(input)^{1/2} + osc(input)^{3/2} + (t−s)^{1/4})`
/// over sliding dyadic windows of the common grid. Oscillations of a
/// d-dimensional series combine per-coordinate oscillations in Euclidean
/// norm (an upper bound for the true two-point diameter, hence a
/// conservative numerator).
pub fn modulus_fit(
    times: &[f64],
    input: &[RangeExtrema],
    output: &[RangeExtrema],
) -> Result<(f64, Vec<ModulusWindow>)> {
    let n = times.len();
    if n < 2 {
        return Err(Error::invalid("modulus fit needs at least two nodes"));
    }
    let mut windows = Vec::new();
    let mut r_fit = 0.0_f64;
    // Dyadic window lengths (in nodes), each slid by half its length.
    let mut w = n - 1;
    while w >= 2 {
        let stride = (w / 2).max(1);
        let mut i = 0;
        while i + w < n {
            let j = i + w;
            let in_osc = combined_osc(input, i, j);
            let out_osc = combined_osc(output, i, j);
            let span = times[j] - times[i];
            let denom = in_osc.sqrt() + in_osc.powf(1.5) + span.powf(0.25);
            let ratio = if denom > 0.0 { out_osc / denom } else { 0.0 };
            r_fit = r_fit.max(ratio);
            windows.push(ModulusWindow {
                start: times[i],
                end: times[j],
                input_osc: in_osc,
                output_osc: out_osc,
                ratio,
            });
            i += stride;
        }
        w /= 2;
    }
    Ok((r_fit, windows))
}

fn combined_osc(per_coord: &[RangeExtrema], i: usize, j: usize) -> f64 {
    per_coord
        .iter()
        .map(|r| {
            let o = r.oscillation(i, j);
            o * o
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (s, b) = linear_regression(&xs, &ys).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
        assert!((b + 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_log_slope_recovers_power_law() {
        let xs: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x.sqrt()).collect();
        let slope = log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sliding_extrema_match_brute_force() {
        let vals: Vec<f64> = (0..257)
            .map(|i| ((i * 37 % 101) as f64).sin() * 3.0)
            .collect();
        let table = RangeExtrema::new(&vals);
        for &(i, j) in &[(0, 0), (0, 256), (5, 9), (100, 228), (17, 18)] {
            let brute_max = vals[i..=j].iter().cloned().fold(f64::MIN, f64::max);
            let brute_min = vals[i..=j].iter().cloned().fold(f64::MAX, f64::min);
            assert!(
                (table.oscillation(i, j) - (brute_max - brute_min)).abs() < 1e-14,
                "window ({i},{j})"
            );
        }
    }

    #[test]
    fn modulus_fit_is_one_third_for_unit_drift() {
        // input(t) = −t pressed against a static wall gives output(t) = t:
        // every window of length ℓ has osc(out) = ℓ and denominator
        // ℓ^{1/2} + ℓ^{3/2} + ℓ^{1/4}; the ratio is maximal at ℓ = 1 where
        // it equals exactly 1/3.
        let n = 1025;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let input: Vec<f64> = times.iter().map(|t| -t).collect();
        let output = times.clone();
        let (r, windows) = modulus_fit(
            &times,
            &[RangeExtrema::new(&input)],
            &[RangeExtrema::new(&output)],
        )
        .unwrap();
        assert!(!windows.is_empty());
        assert!((r - 1.0 / 3.0).abs() < 1e-12, "fitted R = {r}");
    }

    #[test]
    fn holder_half_signal_fits_half_slope() {
        // sup-differences of 0.3·√t anchored at 0 over dyadic spans scale
        // exactly like span^{1/2}.
        let spans: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
        let sups: Vec<f64> = spans.iter().map(|s| 0.3 * s.sqrt()).collect();
        let slope = log_log_slope(&spans, &sups).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
    }
}
