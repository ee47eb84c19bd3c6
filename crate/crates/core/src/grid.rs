//! Step functions on `[0,1)` sampled on rank-`N` dyadic intervals.
//!
//! Sample `i` holds the value on `[i·2^-N, (i+1)·2^-N)`. The dyadic digit
//! `x_j` of a point in that interval is bit `N-1-j` of `i`, so dyadic
//! addition of points is XOR of sample indices.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION_CAP: u32 = 26;

/// Environment variable consulted for the resolution cap.
pub const CAP_ENV: &str = "DYADIC_RESOLUTION_CAP";

// 0 = not yet initialized from the environment.
static CAP: AtomicU32 = AtomicU32::new(0);

/// Current cap on grid resolution.
pub fn resolution_cap() -> u32 {
    let cap = CAP.load(Ordering::Relaxed);
    if cap != 0 {
        return cap;
    }
    let from_env = std::env::var(CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .filter(|&v| (1..=40).contains(&v))
        .unwrap_or(DEFAULT_RESOLUTION_CAP);
    let _ = CAP.compare_exchange(0, from_env, Ordering::Relaxed, Ordering::Relaxed);
    CAP.load(Ordering::Relaxed)
}

/// Override the cap for the whole process (takes precedence over the
/// environment).
pub fn set_resolution_cap(cap: u32) -> Result<()> {
    if cap == 0 || cap > 40 {
        return Err(Error::invalid(format!("resolution cap must lie in 1..=40, got {cap}")));
    }
    CAP.store(cap, Ordering::Relaxed);
    Ok(())
}

/// Fails with [`Error::ResolutionCap`] above the current cap.
pub fn check_resolution(resolution: u32) -> Result<()> {
    let cap = resolution_cap();
    if resolution > cap {
        return Err(Error::ResolutionCap { requested: resolution, cap });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    resolution: u32,
    samples: Vec<f64>,
}

/// `L1`, `L2`, `L∞` and weak-`L1` quasinorm of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub weak_l1: f64,
}

impl DyadicGrid {
    pub fn new(resolution: u32, samples: Vec<f64>) -> Result<Self> {
        check_resolution(resolution)?;
        let expected = 1usize << resolution;
        if samples.len() != expected {
            return Err(Error::SampleCount { resolution, expected, actual: samples.len() });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(DyadicGrid { resolution, samples })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(resolution: u32, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), 1usize << resolution);
        DyadicGrid { resolution, samples }
    }

    pub fn zeros(resolution: u32) -> Result<Self> {
        Self::constant(resolution, 0.0)
    }

    pub fn constant(resolution: u32, c: f64) -> Result<Self> {
        check_resolution(resolution)?;
        if !c.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(DyadicGrid::from_raw(resolution, vec![c; 1usize << resolution]))
    }

    /// Samples `f(i)` for every index `i < 2^N`.
    pub fn from_fn(resolution: u32, f: impl FnMut(usize) -> f64) -> Result<Self> {
        check_resolution(resolution)?;
        Self::new(resolution, (0..1usize << resolution).map(f).collect())
    }

    /// Indicator of a union of dyadic intervals, each given as `(rank, position)`.
    pub fn indicator(resolution: u32, intervals: &[(u32, usize)]) -> Result<Self> {
        let mut g = Self::zeros(resolution)?;
        for &(rank, pos) in intervals {
            if rank > resolution || pos >= 1usize << rank {
                return Err(Error::IndexOutOfRange {
                    what: "dyadic interval",
                    index: pos as u128,
                    resolution,
                });
            }
            let width = 1usize << (resolution - rank);
            g.samples[pos * width..(pos + 1) * width].fill(1.0);
        }
        Ok(g)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, i: usize) -> f64 {
        self.samples[i]
    }

    /// `∫ f`.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DyadicGrid::from_raw(self.resolution, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub(crate) fn same_resolution(&self, other: &Self) -> Result<()> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch { left: self.resolution, right: other.resolution });
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_resolution(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(DyadicGrid::from_raw(self.resolution, samples))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_resolution(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn l1(&self) -> f64 {
        self.samples.iter().map(|v| v.abs()).sum::<f64>() / self.len() as f64
    }

    pub fn l2(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `sup_λ λ·|{|f| ≥ λ}|`.
    ///
    /// For a step function the supremum is attained at one of the sample
    /// values, so it is evaluated exactly by sorting `|f|`. Using `>` instead
    /// of `≥` gives the same supremum.
    pub fn weak_l1(&self) -> f64 {
        let mut v: Vec<f64> = self.samples.iter().map(|x| x.abs()).collect();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        let total = v.len() as f64;
        let mut best = 0.0f64;
        for (i, &val) in v.iter().enumerate() {
            let last_of_run = i + 1 == v.len() || v[i + 1] != val;
            if last_of_run {
                best = best.max(val * (i + 1) as f64 / total);
            }
        }
        best
    }

    pub fn norms(&self) -> Norms {
        Norms { l1: self.l1(), l2: self.l2(), linf: self.linf(), weak_l1: self.weak_l1() }
    }

    /// Write as CSV with header `index,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "value"])?;
        for (i, v) in self.samples.iter().enumerate() {
            wr.write_record([i.to_string(), format!("{v:e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Read the CSV format written by [`DyadicGrid::write_csv`]. The row
    /// count must be a power of two and the indices must run `0, 1, 2, …`
    /// with no gaps or duplicates.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "index" || &headers[1] != "value" {
            return Err(Error::GridFormat(format!(
                "expected header `index,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let idx: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::GridFormat(format!("row {row}: bad index `{}`", &rec[0])))?;
            if idx != row {
                let kind = if idx < row { "duplicate or out-of-order" } else { "gap before" };
                return Err(Error::GridFormat(format!("row {row}: {kind} index {idx}")));
            }
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::GridFormat(format!("row {row}: bad value `{}`", &rec[1])))?;
            samples.push(v);
        }
        if !samples.len().is_power_of_two() {
            return Err(Error::GridFormat(format!(
                "{} rows is not a power of two",
                samples.len()
            )));
        }
        let resolution = samples.len().trailing_zeros();
        DyadicGrid::new(resolution, samples)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Reverse the low `bits` bits of `i`.
#[inline]
pub(crate) fn bitrev(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}
