//! Piecewise-linear sampled paths on a shared time grid.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};

/// An ℝⁿ-valued path sampled on a strictly increasing grid starting at 0.
/// Between nodes the path is interpreted as linear; derivatives of the
/// input are its segment slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    dim: usize,
    times: Vec<f64>,
    /// Row-major node values: `values[k*dim .. (k+1)*dim]` is node `k`.
    values: Vec<f64>,
}

impl SampledPath {
    /// Build from a grid and flat row-major values.
    pub fn new(dim: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("path dimension must be positive"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("path needs at least two nodes"));
        }
        if values.len() != dim * times.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * times.len(),
                got: values.len(),
            });
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("path grid must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("path grid must be strictly increasing"));
        }
        if !times.iter().chain(values.iter()).all(|x| x.is_finite()) {
            return Err(Error::invalid("path contains non-finite entries"));
        }
        Ok(SampledPath { dim, times, values })
    }

    /// Uniform grid over `[0, horizon]` with `nodes` nodes, values from `f`.
    pub fn from_fn(
        dim: usize,
        horizon: f64,
        nodes: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid("path needs at least two nodes"));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        let mut times = Vec::with_capacity(nodes);
        let mut values = vec![0.0; dim * nodes];
        for k in 0..nodes {
            let t = horizon * k as f64 / (nodes - 1) as f64;
            times.push(t);
            f(t, &mut values[k * dim..(k + 1) * dim]);
        }
        SampledPath::new(dim, times, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Node `k` as a slice of length `dim`.
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn value_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    /// Per-coordinate series (copied), for window statistics.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        assert!(c < self.dim);
        (0..self.nodes())
            .map(|k| self.values[k * self.dim + c])
            .collect()
    }

    /// Index of the segment containing `t` (clamped to the grid).
    pub fn segment_index(&self, t: f64) -> usize {
        if t <= self.times[0] {
            return 0;
        }
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return n - 2;
        }
        match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Linear interpolation at `t` (clamped to `[0, horizon]`).
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let k = self.segment_index(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let a = self.value(k);
        let b = &self.values[(k + 1) * self.dim..(k + 2) * self.dim];
        for i in 0..self.dim {
            out[i] = a[i] + s * (b[i] - a[i]);
        }
    }

    /// Write as CSV `t,x1,..,xn` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.nodes() {
            let mut row = format_sig17(self.times[k]);
            for v in self.value(k) {
                row.push(',');
                row.push_str(&format_sig17(*v));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    /// Read a CSV produced by [`write_csv`] (or matching its layout).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut dim = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.starts_with('t') {
                continue; // header
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 2 {
                return Err(Error::Parse(format!(
                    "line {}: need time plus at least one coordinate",
                    lineno + 1
                )));
            }
            let d = fields.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(expect) if expect != d => {
                    return Err(Error::Parse(format!(
                        "line {}: inconsistent column count",
                        lineno + 1
                    )))
                }
                _ => {}
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                values.push(parse(f)?);
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("empty CSV".into()))?;
        SampledPath::new(dim, times, values)
    }
}

/// Format with 17 significant digits — enough to round-trip any f64.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}
