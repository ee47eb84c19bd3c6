use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_resolution, DyadicGrid};
use crate::summability::SummabilityMatrix;
use crate::transform::{fwht, inverse_fwht};
use crate::walsh::rademacher;

/// Finite union of dyadic intervals, each `(rank, position)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSet {
    intervals: Vec<(u32, usize)>,
}

impl DyadicSet {
    pub fn new(intervals: Vec<(u32, usize)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("dyadic set needs at least one interval"));
        }
        for &(rank, pos) in &intervals {
            if rank >= usize::BITS || pos >= 1usize << rank {
                return Err(Error::invalid(format!("interval ({rank}, {pos}) is not dyadic")));
            }
        }
        Ok(DyadicSet { intervals })
    }

    pub fn intervals(&self) -> &[(u32, usize)] {
        &self.intervals
    }

    /// Largest rank used.
    pub fn rank(&self) -> u32 {
        self.intervals.iter().map(|i| i.0).max().unwrap()
    }

    pub fn indicator(&self, resolution: u32) -> Result<DyadicGrid> {
        DyadicGrid::indicator(resolution, &self.intervals)
    }
}

/// A polynomial `W⁰` with `𝒯_{2^{b+2}} W⁰ = α r_b 1_A`.
#[derive(Clone, Debug)]
pub struct Lemma2Poly {
    pub b: u32,
    pub alpha: f64,
    pub poly: DyadicGrid,
    /// `α r_b 1_A`.
    pub target: DyadicGrid,
    /// `min_k T_{2^{b+2}}^{(k+1)}` over the spectral band of the target.
    pub min_tail: f64,
    /// `min_k (2^{b+2} - k)/(2^{b+2} + 1)` over the same band, the Fejér value.
    pub fejer_bound: f64,
    /// Largest target coefficient outside `[2^b, 2^{b+1})`.
    pub leakage: f64,
    /// `‖𝒯_{2^{b+2}} W⁰ - α r_b 1_A‖_∞`.
    pub reproduction_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Summary {
    pub b: u32,
    pub alpha: f64,
    pub l1: f64,
    pub linf: f64,
    pub min_tail: f64,
    pub fejer_bound: f64,
    pub leakage: f64,
    pub reproduction_error: f64,
}

impl Lemma2Poly {
    pub fn summary(&self) -> Lemma2Summary {
        Lemma2Summary {
            b: self.b,
            alpha: self.alpha,
            l1: self.poly.l1(),
            linf: self.poly.linf(),
            min_tail: self.min_tail,
            fejer_bound: self.fejer_bound,
            leakage: self.leakage,
            reproduction_error: self.reproduction_error,
        }
    }
}

/// Builds `W⁰ = Σ_{2^b ≤ k < 2^{b+1}} C_k / T_{2^{b+2}}^{(k+1)} w_k`, where
/// `C_k` are the Walsh coefficients of `α r_b 1_A` and `A` has rank `≤ b`.
pub fn lemma2_poly(
    t: &SummabilityMatrix,
    b: u32,
    set: &DyadicSet,
    alpha: f64,
    resolution: u32,
) -> Result<Lemma2Poly> {
    check_resolution(resolution)?;
    if b + 2 > resolution {
        return Err(Error::invalid(format!("need b + 2 ≤ N, got b = {b}, N = {resolution}")));
    }
    if set.rank() > b {
        return Err(Error::invalid(format!("set rank {} exceeds b = {b}", set.rank())));
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    let n = 1u64 << (b + 2);
    let target = rademacher(b, resolution)?.mul(&set.indicator(resolution)?)?.scale(alpha);
    let tails = t.tail_sums(n)?;
    let band = (1usize << b)..(1usize << (b + 1));

    let mut spec = fwht(&target);
    let mut leakage = 0.0f64;
    let mut min_tail = f64::INFINITY;
    for (k, c) in spec.coefficients_mut().iter_mut().enumerate() {
        if band.contains(&k) {
            let tail = tails.tail(k as u64 + 1);
            min_tail = min_tail.min(tail);
            if !(tail > 0.0) {
                return Err(Error::Domain(format!("T_{n}^({}) = {tail} is not positive", k + 1)));
            }
            *c /= tail;
        } else {
            leakage = leakage.max(c.abs());
            *c = 0.0;
        }
    }
    let poly = inverse_fwht(&spec);
    let fejer_bound = (n - band.end as u64 + 1) as f64 / (n + 1) as f64;
    let reproduction_error = t.mean(&poly, n)?.max_abs_diff(&target)?;
    Ok(Lemma2Poly { b, alpha, poly, target, min_tail, fejer_bound, leakage, reproduction_error })
}
