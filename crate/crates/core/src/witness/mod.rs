//! Block construction witnessing divergence of weighted martingale
//! transforms, and the polynomials used to assemble a demo-scale `f₀`.
//!
//! At scale `a` with block length `η`, three groups of dyadic digits are
//! used: the guard digit `a-2η-1`, the block `B1 = a-2η … a-η-1` and its copy
//! `B2 = a-η … a-1`. The witness is
//!
//! ```text
//! W_a = η^{-1/2} Π_{j<η} (1 + r_{a-2η+j} r_{a-η+j}) Σ_{k∈B1} r_k
//! ```
//!
//! and everything below depends only on these `2η+1` digits, so it is
//! evaluated on a `(2η+1)`-bit window rather than a `2^a`-point grid. Window
//! digit `p` is dyadic digit `a-2η-1+p`; in a window index it is bit `2η-p`.

mod f0;
mod lemma2;

pub use f0::*;
pub use lemma2::*;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_resolution, resolution_cap, DyadicGrid};
use crate::martingale::BlockMeans;
use crate::sequence::Callable;
use crate::weights::WeightFamily;

/// A divergence sequence `γ(n)` as needed for `G_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    Const(u32),
    /// `⌊|n|/2⌋`
    HalfOrder,
    /// `|n| - d`
    OrderMinus(u32),
    /// Indexed by `|n|`.
    ByOrder(Vec<u32>),
    /// Arbitrary `γ(n)`; `G_a` is found by enumeration, so only `a ≤ 24`.
    #[serde(skip)]
    PerIndex(Callable<u32>),
}

impl GammaRule {
    fn at_order(&self, m: u32) -> Result<u32> {
        Ok(match self {
            GammaRule::Const(c) => *c,
            GammaRule::HalfOrder => m / 2,
            GammaRule::OrderMinus(d) => m.saturating_sub(*d),
            GammaRule::ByOrder(t) => *t.get(m as usize).ok_or_else(|| {
                Error::invalid(format!("gamma table has {} entries, |n| = {m} requested", t.len()))
            })?,
            GammaRule::PerIndex(_) => unreachable!(),
        })
    }

    /// `G_a = inf{γ(n) : 2^{a/2} ≤ n < 2^a}`. For order-based rules this is
    /// the minimum over orders `⌊a/2⌋ … a-1`.
    pub fn infimum(&self, a: u32) -> Result<u32> {
        if let GammaRule::PerIndex(f) = self {
            if a > 24 {
                return Err(Error::invalid("per-index gamma is enumerated only for a ≤ 24"));
            }
            let full = 1u64 << a;
            let r = full.isqrt();
            let lo = if r * r < full { r + 1 } else { r };
            return Ok((lo..full).map(|n| f.call(n)).min().unwrap());
        }
        (a / 2..a).map(|m| self.at_order(m)).try_fold(u32::MAX, |acc, g| Ok(acc.min(g?)))
    }
}

/// Scale, block length and window of one block construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockParams {
    pub a: u32,
    pub eta: u32,
    /// `G_a`, when the parameters came from a divergence sequence.
    pub g_a: Option<u32>,
}

impl BlockParams {
    /// `η_a = min(⌊a/8⌋, ⌊G_a/2⌋)`. Requires `a ≥ 8` and `η_a ≥ 1`.
    pub fn from_gamma(a: u32, gamma: &GammaRule) -> Result<Self> {
        if a < 8 {
            return Err(Error::ScaleTooSmall(format!("a = {a}; the construction needs a ≥ 8")));
        }
        let g = gamma.infimum(a)?;
        let eta = (a / 8).min(g / 2);
        if eta == 0 {
            return Err(Error::ScaleTooSmall(format!(
                "eta_a = 0 at a = {a} (G_a = {g}); need G_a ≥ 2 on orders {}..{}",
                a / 2,
                a - 1
            )));
        }
        let p = BlockParams { a, eta, g_a: Some(g) };
        p.check()?;
        Ok(p)
    }

    /// Fixed `η` at scale `a`, with `2η+1 ≤ a`.
    pub fn with_eta(a: u32, eta: u32) -> Result<Self> {
        if eta == 0 {
            return Err(Error::ScaleTooSmall("eta must be at least 1".into()));
        }
        let p = BlockParams { a, eta, g_a: None };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if self.a > 127 {
            return Err(Error::invalid(format!("scale a = {} exceeds 127", self.a)));
        }
        if 2 * self.eta + 1 > self.a {
            return Err(Error::invalid(format!("window 2*{}+1 does not fit below a = {}", self.eta, self.a)));
        }
        let cap = resolution_cap();
        if self.window_bits() > cap {
            return Err(Error::ResolutionCap { requested: self.window_bits(), cap });
        }
        Ok(())
    }

    /// `2η+1`.
    pub fn window_bits(&self) -> u32 {
        2 * self.eta + 1
    }

    /// Lowest dyadic digit of the window, `a-2η-1`.
    pub fn window_lo(&self) -> u32 {
        self.a - 2 * self.eta - 1
    }

    /// Window index of a sample of a rank-`N` grid, `N ≥ a`.
    pub fn window_index(&self, i: usize, resolution: u32) -> usize {
        (i >> (resolution - self.a)) & ((1usize << self.window_bits()) - 1)
    }

    fn core_mask(&self) -> usize {
        (1usize << (2 * self.eta)) - 1
    }

    /// `ε_j` for `j < η` as bits of the result, from the `B1` digits
    /// (`high`, with `x_{a-2η+j}` at bit `η-1-j`).
    fn eps_bits(&self, high: usize) -> u32 {
        let eta = self.eta;
        let ones = high.count_ones();
        let keep = 3 * ones >= eta;
        let mut e = 0u32;
        for j in 0..eta {
            let x = ((high >> (eta - 1 - j)) & 1) as u32;
            let bit = if keep { x } else { 1 - x };
            e |= bit << j;
        }
        e
    }

    fn n_from_eps(&self, eps: u32) -> u128 {
        assert!(eps != 0, "chosen block is all zero");
        let lo = self.a - 2 * self.eta;
        let lambda = (eps as u128) << lo;
        lambda + (lambda << self.eta)
    }
}

/// `n_a(x)` for window index `w`.
pub fn choose_n(p: &BlockParams, w: usize) -> u128 {
    let high = (w & p.core_mask()) >> p.eta;
    p.n_from_eps(p.eps_bits(high))
}

/// `x ∈ E_a`, i.e. `x_{a-η} ⊕ x_{a-2η-1} = 1`, for window index `w`.
pub fn e_a_member(p: &BlockParams, w: usize) -> bool {
    let guard = (w >> (2 * p.eta)) & 1;
    let first_copy = (w >> (p.eta - 1)) & 1;
    guard ^ first_copy == 1
}

/// `W_a` stored on the `2η` block digits; it does not depend on the guard
/// digit.
#[derive(Clone, Debug)]
pub struct WitnessPoly {
    pub params: BlockParams,
    core: Vec<f64>,
}

impl WitnessPoly {
    /// Core samples indexed by the `2η` block digits (`B1` high, `B2` low).
    pub fn core(&self) -> &[f64] {
        &self.core
    }

    /// On the full `(2η+1)`-bit window.
    pub fn window_grid(&self) -> Result<DyadicGrid> {
        let bits = self.params.window_bits();
        check_resolution(bits)?;
        let mask = self.params.core_mask();
        DyadicGrid::from_fn(bits, |w| self.core[w & mask])
    }

    /// On a rank-`N` grid, `a ≤ N ≤ cap`.
    pub fn embed(&self, resolution: u32) -> Result<DyadicGrid> {
        if resolution < self.params.a {
            return Err(Error::invalid(format!(
                "embedding resolution {resolution} is below the scale a = {}",
                self.params.a
            )));
        }
        check_resolution(resolution)?;
        let mask = self.params.core_mask();
        let p = self.params;
        DyadicGrid::from_fn(resolution, |i| self.core[p.window_index(i, resolution) & mask])
    }

    /// `‖W_a‖_1`, by exact sample integration.
    pub fn l1(&self) -> f64 {
        self.core.iter().map(|v| v.abs()).sum::<f64>() / self.core.len() as f64
    }
}

pub fn witness_poly(p: &BlockParams) -> WitnessPoly {
    let eta = p.eta;
    let amp = (1u64 << eta) as f64 / (eta as f64).sqrt();
    let core = (0..1usize << (2 * eta))
        .map(|y| {
            let (high, low) = (y >> eta, y & ((1 << eta) - 1));
            if high == low {
                amp * (eta as f64 - 2.0 * high.count_ones() as f64)
            } else {
                0.0
            }
        })
        .collect();
    WitnessPoly { params: *p, core }
}

/// `W¹ = W / γ^{1/4}`.
pub fn lemma1_scale(w: &DyadicGrid, gamma: f64) -> Result<DyadicGrid> {
    if !(gamma >= 1.0) {
        return Err(Error::invalid(format!("lemma 1 scaling needs gamma ≥ 1, got {gamma}")));
    }
    Ok(w.scale(gamma.powf(-0.25)))
}

/// Outputs of one block-construction experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub a: u32,
    pub eta: u32,
    pub weights: String,
    pub l1_norm: f64,
    pub e_a_measure: f64,
    #[serde(rename = "min_on_Ea")]
    pub min_on_ea: f64,
    #[serde(rename = "median_on_Ea")]
    pub median_on_ea: f64,
    pub weak_ratio: f64,
    pub lambda: f64,
    pub c_empirical: f64,
    /// `max |direct - closed form|` over `E_a`.
    pub closed_form_max_error: f64,
    /// Fraction of `E_a` where the closed form misses the direct value by more
    /// than `1e-9`.
    pub closed_form_mismatch_fraction: f64,
}

impl WitnessReport {
    /// `min_{E_a} |M| / √η`.
    pub fn normalized_min(&self) -> f64 {
        self.min_on_ea / (self.eta as f64).sqrt()
    }
}

struct ClassPlan {
    eps: u32,
    /// `(core level c, Ω_k(n))` for each digit `k = a-2η+c` of `n`.
    terms: Vec<(u32, f64)>,
    /// `(j, Ω_{a-2η+j}(n))` for the `B1` digits, used by the closed form.
    block: Vec<(u32, f64)>,
}

/// Evaluates `M_{n_a(x)}(Ω) W_a(x)` at every window point of `E_a`
/// directly from conditional expectations of `W_a`.
///
/// Because the digits of `n_a(x)` come in matched pairs and `W_a` vanishes
/// unless the two blocks agree, `W_a·w_{n_a(x)} = W_a`; one set of block
/// means therefore serves every `x`. The weak ratio is
/// `λ |{x ∈ E_a : |M| ≥ λ}| / ‖W_a‖_1` with `λ = 0.3 √η c`, where `c` is the
/// smallest weight the transform uses.
pub fn witness_eval(p: &BlockParams, omega: &WeightFamily) -> Result<WitnessReport> {
    let eta = p.eta;
    let base = p.a - 2 * eta;
    let poly = witness_poly(p);
    let l1 = poly.l1();
    let core_bits = 2 * eta;
    let means = BlockMeans::from_samples(core_bits, poly.core.clone());

    let plans: Vec<ClassPlan> = (0..1usize << eta)
        .map(|high| {
            let eps = p.eps_bits(high);
            let n = p.n_from_eps(eps);
            let mut terms = Vec::new();
            let mut block = Vec::new();
            for c in 0..core_bits {
                if (n >> (base + c)) & 1 == 1 {
                    let w = omega.omega(base + c, n)?;
                    terms.push((c, w));
                    if c < eta {
                        block.push((c, w));
                    }
                }
            }
            Ok(ClassPlan { eps, terms, block })
        })
        .collect::<Result<_>>()?;
    let c_emp = plans
        .iter()
        .flat_map(|pl| pl.terms.iter().map(|t| t.1))
        .fold(f64::INFINITY, f64::min);

    let inv_sqrt = 1.0 / (eta as f64).sqrt();
    let window = 1usize << p.window_bits();
    let mask = p.core_mask();
    let eval = |w: usize| -> (f64, f64) {
        let y = w & mask;
        let high = y >> eta;
        let pl = &plans[high];
        let mut m = 0.0;
        for &(c, wt) in &pl.terms {
            let fine = means.level(c + 1)[y >> (core_bits - c - 1)];
            let coarse = means.level(c)[y >> (core_bits - c)];
            m += wt * (fine - coarse);
        }
        // Closed form (w_n(x)/√η) Σ_{k∈B1} ε_k Ω_k(n) r_k(x).
        let low = y & ((1 << eta) - 1);
        let differ = (high ^ low) as u32;
        let mut parity = 0u32;
        let mut s = 0.0;
        for j in 0..eta {
            if (pl.eps >> j) & 1 == 1 {
                parity ^= (differ >> (eta - 1 - j)) & 1;
            }
        }
        for &(j, wt) in &pl.block {
            let x = (high >> (eta - 1 - j)) & 1;
            s += if x == 0 { wt } else { -wt };
        }
        let wn = if parity == 0 { 1.0 } else { -1.0 };
        (m, wn * inv_sqrt * s)
    };

    let values: Vec<(f64, f64)> =
        (0..window).into_par_iter().filter(|&w| e_a_member(p, w)).map(eval).collect();
    let members = values.len();
    let e_a_measure = members as f64 / window as f64;

    let mut abs: Vec<f64> = values.iter().map(|v| v.0.abs()).collect();
    let cf_err = values.iter().map(|v| (v.0 - v.1).abs()).fold(0.0, f64::max);
    let mismatches = values.iter().filter(|v| (v.0 - v.1).abs() > 1e-9).count();
    drop(values);

    let lambda = 0.3 * (eta as f64).sqrt() * c_emp;
    let above = abs.iter().filter(|&&v| v >= lambda * (1.0 - 1e-12)).count();
    let weak_ratio = lambda * (above as f64 / window as f64) / l1;
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let mid = abs.len() / 2;
    let median = *abs.select_nth_unstable_by(mid, |x, y| x.total_cmp(y)).1;

    Ok(WitnessReport {
        a: p.a,
        eta,
        weights: omega.id(),
        l1_norm: l1,
        e_a_measure,
        min_on_ea: min,
        median_on_ea: median,
        weak_ratio,
        lambda,
        c_empirical: c_emp,
        closed_form_max_error: cf_err,
        closed_form_mismatch_fraction: mismatches as f64 / members.max(1) as f64,
    })
}

/// `n_a(x)` and `E_a` membership for a sample of a rank-`N` grid.
pub fn choose_n_full(p: &BlockParams, i: usize, resolution: u32) -> u128 {
    choose_n(p, p.window_index(i, resolution))
}

pub fn e_a_member_full(p: &BlockParams, i: usize, resolution: u32) -> bool {
    e_a_member(p, p.window_index(i, resolution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::WalshIndex;

    #[test]
    fn params_examples() {
        let p = BlockParams::from_gamma(33, &GammaRule::HalfOrder).unwrap();
        assert_eq!((p.g_a, p.eta), (Some(8), 4));
        let p = BlockParams::from_gamma(32, &GammaRule::OrderMinus(1)).unwrap();
        assert_eq!((p.g_a, p.eta), (Some(15), 4));
        let p = BlockParams::from_gamma(64, &GammaRule::Const(2)).unwrap();
        assert_eq!(p.eta, 1);
        assert!(matches!(BlockParams::from_gamma(64, &GammaRule::Const(1)), Err(Error::ScaleTooSmall(_))));
        assert!(matches!(BlockParams::from_gamma(7, &GammaRule::Const(9)), Err(Error::ScaleTooSmall(_))));
        let per = GammaRule::PerIndex(Callable::new(|n| (64 - n.leading_zeros()) / 2));
        assert_eq!(BlockParams::from_gamma(17, &per).unwrap().g_a, Some(4));
    }

    #[test]
    fn eta_one_witness() {
        let p = BlockParams::with_eta(10, 1).unwrap();
        let w = witness_poly(&p).window_grid().unwrap();
        // (1 + r_{a-2} r_{a-1}) r_{a-2} on the digits (guard, a-2, a-1).
        for i in 0..8usize {
            let (x1, x2) = ((i >> 1) & 1, i & 1);
            let (r1, r2) = (1.0 - 2.0 * x1 as f64, 1.0 - 2.0 * x2 as f64);
            assert_eq!(w.get(i), (1.0 + r1 * r2) * r1);
        }
        assert_eq!(witness_poly(&p).l1(), 1.0);
    }

    #[test]
    fn l1_at_most_one() {
        for eta in 1..=10 {
            let p = BlockParams::with_eta(8 * eta + 1, eta).unwrap();
            assert!(witness_poly(&p).l1() <= 1.0, "eta={eta}");
        }
    }

    #[test]
    fn e_a_half_and_paired_digits() {
        for eta in 1..=6u32 {
            let p = BlockParams::with_eta(8 * eta, eta).unwrap();
            let window = 1usize << p.window_bits();
            let count = (0..window).filter(|&w| e_a_member(&p, w)).count();
            assert_eq!(count * 2, window);
            for w in 0..window {
                let n = WalshIndex(choose_n(&p, w));
                let lo = p.a - 2 * eta;
                assert!(n.0 >= 1u128 << lo && n.0 < 1u128 << p.a);
                for j in 0..eta {
                    assert_eq!(n.digit(lo + j), n.digit(lo + eta + j));
                }
            }
        }
    }

    #[test]
    fn alignment_count() {
        // At least η/3 of the chosen digits ε_k have r_k(x) of one sign.
        for eta in 1..=9u32 {
            let p = BlockParams::with_eta(8 * eta, eta).unwrap();
            for high in 0..1usize << eta {
                let eps = p.eps_bits(high);
                let mut plus = 0;
                let mut minus = 0;
                for j in 0..eta {
                    if (eps >> j) & 1 == 1 {
                        if (high >> (eta - 1 - j)) & 1 == 0 { plus += 1 } else { minus += 1 }
                    }
                }
                assert!(3 * plus.max(minus) >= eta, "eta={eta} high={high:b}");
            }
        }
    }

    #[test]
    fn report_invariants() {
        for eta in [2u32, 3, 4] {
            let p = BlockParams::with_eta(8 * eta, eta).unwrap();
            let r = witness_eval(&p, &WeightFamily::Ones).unwrap();
            assert_eq!(r.e_a_measure, 0.5);
            assert!(r.l1_norm <= 1.0);
            assert_eq!(r.c_empirical, 1.0);
        }
    }

    #[test]
    fn lemma1_quarter_power() {
        let g = DyadicGrid::constant(3, 4.0).unwrap();
        assert_eq!(lemma1_scale(&g, 16.0).unwrap().get(0), 2.0);
        assert!(lemma1_scale(&g, 0.5).is_err());
    }
}
