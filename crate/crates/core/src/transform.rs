//! Fast Walsh–Hadamard transform in Paley order and XOR convolution.
//!
//! `f̂(n) = 2^-N Σ_i f_i w_n(i·2^-N)`. With the sample convention of
//! [`crate::grid`], `w_n` at sample `i` is `(-1)^{popcount(n & rev_N(i))}`,
//! so the Paley transform is the natural-order Hadamard transform applied
//! after a bit-reversal permutation of the samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bitrev, check_resolution, DyadicGrid};

/// Walsh–Fourier coefficients `f̂(0), …, f̂(2^N - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumVector {
    resolution: u32,
    coefficients: Vec<f64>,
}

impl SpectrumVector {
    pub fn new(resolution: u32, coefficients: Vec<f64>) -> Result<Self> {
        check_resolution(resolution)?;
        let expected = 1usize << resolution;
        if coefficients.len() != expected {
            return Err(Error::SampleCount { resolution, expected, actual: coefficients.len() });
        }
        if let Some(index) = coefficients.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SpectrumVector { resolution, coefficients })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// `Σ_n f̂(n)²`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// Multiply coefficient `n` by `m(n)`.
    pub fn multiply(&mut self, m: impl Fn(usize) -> f64) {
        for (n, c) in self.coefficients.iter_mut().enumerate() {
            *c *= m(n);
        }
    }
}

/// In-place unnormalized Hadamard butterfly (natural order).
pub(crate) fn hadamard_in_place(v: &mut [f64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

fn bitrev_permuted(v: &[f64], bits: u32) -> Vec<f64> {
    (0..v.len()).map(|j| v[bitrev(j, bits)]).collect()
}

/// Paley-ordered Walsh–Fourier coefficients of `f`. `O(N·2^N)`.
pub fn fwht(f: &DyadicGrid) -> SpectrumVector {
    let n = f.resolution();
    let mut v = bitrev_permuted(f.samples(), n);
    hadamard_in_place(&mut v);
    let scale = 1.0 / v.len() as f64;
    v.iter_mut().for_each(|c| *c *= scale);
    SpectrumVector { resolution: n, coefficients: v }
}

/// Inverse of [`fwht`]: `f = Σ_n f̂(n) w_n`.
pub fn inverse_fwht(s: &SpectrumVector) -> DyadicGrid {
    let n = s.resolution;
    let mut h = s.coefficients.clone();
    hadamard_in_place(&mut h);
    DyadicGrid::from_raw(n, bitrev_permuted(&h, n))
}

/// [`inverse_fwht`] that first checks the spectrum is at the expected resolution.
pub fn inverse_fwht_at(s: &SpectrumVector, resolution: u32) -> Result<DyadicGrid> {
    if s.resolution != resolution {
        return Err(Error::ResolutionMismatch { left: s.resolution, right: resolution });
    }
    Ok(inverse_fwht(s))
}

/// Convolution on the dyadic group: `(f∗g)[i] = 2^-N Σ_j f[i⊕j] g[j]`,
/// evaluated through the transform in `O(N·2^N)`.
pub fn xor_convolve(f: &DyadicGrid, g: &DyadicGrid) -> Result<DyadicGrid> {
    f.same_resolution(g)?;
    let mut a = fwht(f);
    let b = fwht(g);
    for (x, y) in a.coefficients.iter_mut().zip(&b.coefficients) {
        *x *= y;
    }
    Ok(inverse_fwht(&a))
}

/// Direct `O(4^N)` evaluation of [`xor_convolve`], used as an oracle.
pub fn xor_convolve_direct(f: &DyadicGrid, g: &DyadicGrid) -> Result<DyadicGrid> {
    f.same_resolution(g)?;
    let len = f.len();
    let (fs, gs) = (f.samples(), g.samples());
    let out = (0..len)
        .map(|i| (0..len).map(|j| fs[i ^ j] * gs[j]).sum::<f64>() / len as f64)
        .collect();
    Ok(DyadicGrid::from_raw(f.resolution(), out))
}
