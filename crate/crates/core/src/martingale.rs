//! Dyadic martingale operators and the weighted Walsh–Carleson maximal
//! operator.
//!
//! `E_k` averages over rank-`k` dyadic intervals, `𝓔_k = E_{k+1} - E_k`, and
//!
//! ```text
//! M_n(Ω)f = Σ_k ε_k(n) Ω_k(n) 𝓔_k(f·w_n)
//! P_n(Ω)  = Σ_k ε_k(n) Ω_k(n) r_k D_{2^k}
//! ```
//!
//! so that `S_n f = w_n M_n(𝟙) f` and `M_n(Ω) f = (f·w_n) ∗ P_n(Ω)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::index::WalshIndex;
use crate::walsh::walsh_sign;
use crate::weights::WeightFamily;

/// All conditional expectations of one grid, built by pairwise averaging.
/// `level(k)` has `2^k` entries, the averages over rank-`k` intervals.
#[derive(Clone, Debug)]
pub struct BlockMeans {
    resolution: u32,
    levels: Vec<Vec<f64>>,
}

impl BlockMeans {
    pub fn new(f: &DyadicGrid) -> Self {
        Self::from_samples(f.resolution(), f.samples().to_vec())
    }

    /// Takes ownership of the finest level.
    pub fn from_samples(resolution: u32, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), 1usize << resolution);
        let mut levels = Vec::with_capacity(resolution as usize + 1);
        levels.push(samples);
        for _ in 0..resolution {
            let finer = levels.last().unwrap();
            let coarser = finer.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            levels.push(coarser);
        }
        levels.reverse();
        BlockMeans { resolution, levels }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn level(&self, k: u32) -> &[f64] {
        &self.levels[k as usize]
    }

    /// `E_k f` at sample `i`.
    #[inline]
    pub fn at(&self, k: u32, i: usize) -> f64 {
        self.levels[k as usize][i >> (self.resolution - k)]
    }

    /// `𝓔_k f` at sample `i`, `k < N`.
    #[inline]
    pub fn diff_at(&self, k: u32, i: usize) -> f64 {
        self.at(k + 1, i) - self.at(k, i)
    }
}

fn check_level(k: u32, resolution: u32, inclusive: bool) -> Result<()> {
    let bad = if inclusive { k > resolution } else { k >= resolution };
    if bad {
        return Err(Error::IndexOutOfRange { what: "martingale level", index: k as u128, resolution });
    }
    Ok(())
}

/// `E_k f`, `0 ≤ k ≤ N`.
pub fn cond_exp(f: &DyadicGrid, k: u32) -> Result<DyadicGrid> {
    check_level(k, f.resolution(), true)?;
    let width = 1usize << (f.resolution() - k);
    let mut out = Vec::with_capacity(f.len());
    for chunk in f.samples().chunks_exact(width) {
        let avg = chunk.iter().sum::<f64>() / width as f64;
        out.extend(std::iter::repeat(avg).take(width));
    }
    Ok(DyadicGrid::from_raw(f.resolution(), out))
}

/// `𝓔_k f = E_{k+1} f - E_k f`, `0 ≤ k < N`.
pub fn mdiff(f: &DyadicGrid, k: u32) -> Result<DyadicGrid> {
    check_level(k, f.resolution(), false)?;
    cond_exp(f, k + 1)?.sub(&cond_exp(f, k)?)
}

/// Doob maximal function `E*f = max_{0≤k≤N} |E_k f|`.
pub fn doob_max(f: &DyadicGrid) -> DyadicGrid {
    let bm = BlockMeans::new(f);
    let n = f.resolution();
    let out = (0..f.len())
        .map(|i| (0..=n).fold(0.0f64, |m, k| m.max(bm.at(k, i).abs())))
        .collect();
    DyadicGrid::from_raw(n, out)
}

/// Martingale square function.
///
/// By default it is `(|E_0 f|² + Σ_{k=1}^{N} |E_k f - E_{k-1} f|²)^{1/2}`;
/// keeping the `E_0` term makes `‖S(f)‖_1` a norm rather than a seminorm
/// that vanishes on constants. [`SquareFunction::without_mean`] drops it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareFunction {
    pub include_mean: bool,
}

impl Default for SquareFunction {
    fn default() -> Self {
        SquareFunction { include_mean: true }
    }
}

impl SquareFunction {
    pub fn without_mean() -> Self {
        SquareFunction { include_mean: false }
    }

    pub fn apply(&self, f: &DyadicGrid) -> DyadicGrid {
        let bm = BlockMeans::new(f);
        let n = f.resolution();
        let out = (0..f.len())
            .map(|i| {
                let mut s = if self.include_mean { bm.at(0, i).powi(2) } else { 0.0 };
                for k in 0..n {
                    s += bm.diff_at(k, i).powi(2);
                }
                s.sqrt()
            })
            .collect();
        DyadicGrid::from_raw(n, out)
    }

    pub fn h1_norm(&self, f: &DyadicGrid) -> f64 {
        self.apply(f).l1()
    }
}

pub fn square_function(f: &DyadicGrid) -> DyadicGrid {
    SquareFunction::default().apply(f)
}

/// `‖f‖_{H_1} = ‖S(f)‖_1`.
pub fn h1_norm(f: &DyadicGrid) -> f64 {
    SquareFunction::default().h1_norm(f)
}

fn grid_index(n: WalshIndex, resolution: u32) -> Result<u64> {
    let top = 1u128 << resolution;
    if n.value() == 0 || n.value() >= top {
        return Err(Error::IndexOutOfRange { what: "transform index n", index: n.value(), resolution });
    }
    Ok(n.value() as u64)
}

/// `(k, Ω_k(n))` for every digit `k` of `n`.
pub(crate) fn digit_weights(n: WalshIndex, omega: &WeightFamily) -> Result<Vec<(u32, f64)>> {
    n.ones().map(|k| Ok((k, omega.omega(k, n.value())?))).collect()
}

fn mtransform_grid(f: &DyadicGrid, n: u64, weights: &[(u32, f64)]) -> DyadicGrid {
    let res = f.resolution();
    let g: Vec<f64> =
        f.samples().iter().enumerate().map(|(i, &v)| v * walsh_sign(n, i, res)).collect();
    let bm = BlockMeans::from_samples(res, g);
    let out = (0..f.len())
        .map(|i| weights.iter().map(|&(k, w)| w * bm.diff_at(k, i)).sum())
        .collect();
    DyadicGrid::from_raw(res, out)
}

/// `M_n(Ω) f`, evaluated from the defining sum over the digits of `n`.
pub fn mtransform(f: &DyadicGrid, n: WalshIndex, omega: &WeightFamily) -> Result<TransformResult> {
    let nn = grid_index(n, f.resolution())?;
    let weights = digit_weights(n, omega)?;
    Ok(TransformResult {
        grid: mtransform_grid(f, nn, &weights),
        operator: "martingale_transform".into(),
        index: IndexSpec::Single(n.value() as u64),
        weights: omega.id(),
    })
}

/// `P_n(Ω) = Σ_k ε_k(n) Ω_k(n) r_k D_{2^k}`, built in the time domain:
/// `r_k D_{2^k}` is `±2^k` on `[0, 2^-k)` with the sign of digit `x_k`.
pub fn carleson_kernel(n: WalshIndex, omega: &WeightFamily, resolution: u32) -> Result<DyadicGrid> {
    grid_index(n, resolution)?;
    let mut out = vec![0.0; 1usize << resolution];
    for (k, w) in digit_weights(n, omega)? {
        let scale = w * (1u64 << k) as f64;
        let support = 1usize << (resolution - k);
        let bit = resolution - 1 - k;
        for (i, v) in out[..support].iter_mut().enumerate() {
            *v += if (i >> bit) & 1 == 0 { scale } else { -scale };
        }
    }
    Ok(DyadicGrid::from_raw(resolution, out))
}

/// A strictly increasing nonempty list of positive indices `{n_a}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct IndexSet(Vec<u64>);

impl IndexSet {
    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("index set is empty"));
        }
        if indices[0] == 0 {
            return Err(Error::invalid("index set must contain positive integers"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "index set must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(IndexSet(indices))
    }

    /// `{lo, lo+1, …, hi-1}`.
    pub fn range(lo: u64, hi: u64) -> Result<Self> {
        Self::new((lo..hi).collect())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn max(&self) -> u64 {
        *self.0.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<u64>> for IndexSet {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        IndexSet::new(v)
    }
}

impl From<IndexSet> for Vec<u64> {
    fn from(s: IndexSet) -> Vec<u64> {
        s.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSpec {
    Single(u64),
    Set(IndexSet),
}

/// Output grid of a transform plus what produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformResult {
    pub grid: DyadicGrid,
    pub operator: String,
    pub index: IndexSpec,
    pub weights: String,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    operator: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    index_set: Option<&'a [u64]>,
    weights: &'a str,
    resolution: u32,
}

impl TransformResult {
    pub fn sidecar_json(&self) -> Result<String> {
        let (n, index_set) = match &self.index {
            IndexSpec::Single(n) => (Some(*n), None),
            IndexSpec::Set(s) => (None, Some(s.as_slice())),
        };
        Ok(serde_json::to_string_pretty(&Sidecar {
            operator: &self.operator,
            n,
            index_set,
            weights: &self.weights,
            resolution: self.grid.resolution(),
        })?)
    }

    /// Writes `path` as grid CSV and the sidecar next to it with a `.json`
    /// extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.grid.save_csv(path)?;
        std::fs::write(path.with_extension("json"), self.sidecar_json()?)?;
        Ok(())
    }
}

/// `W_C(Ω, S) f = sup_{n∈S} |M_n(Ω) f|`.
///
/// The index set is split into chunks evaluated in parallel, each keeping a
/// running maximum; chunk results are merged with a pointwise max, so the
/// output does not depend on scheduling.
pub fn carleson_max(f: &DyadicGrid, omega: &WeightFamily, set: &IndexSet) -> Result<TransformResult> {
    let res = f.resolution();
    for &n in set.as_slice() {
        grid_index(WalshIndex::from(n), res)?;
    }
    let plans: Vec<(u64, Vec<(u32, f64)>)> = set
        .as_slice()
        .iter()
        .map(|&n| Ok((n, digit_weights(WalshIndex::from(n), omega)?)))
        .collect::<Result<_>>()?;
    let chunk = (plans.len() / rayon::current_num_threads().max(1) / 4).max(1);
    let merged = plans
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = vec![0.0f64; f.len()];
            for (n, w) in part {
                let m = mtransform_grid(f, *n, w);
                for (a, v) in acc.iter_mut().zip(m.samples()) {
                    *a = a.max(v.abs());
                }
            }
            acc
        })
        .reduce_with(|mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x = x.max(*y);
            }
            a
        })
        .expect("nonempty index set");
    Ok(TransformResult {
        grid: DyadicGrid::from_raw(res, merged),
        operator: "carleson_max".into(),
        index: IndexSpec::Set(set.clone()),
        weights: omega.id(),
    })
}

/// Factor `C` in the pointwise bound `|M_n(Ω) f| ≤ C·E*(|f|)`, from Abel
/// summation of `Σ_k ε_k Ω_k (E_{k+1} - E_k)`:
///
/// ```text
/// C = Ω_{|n|} + ε_0 Ω_0 + Σ_{k=1}^{|n|} |ε_{k-1} Ω_{k-1} - ε_k Ω_k|
/// ```
///
/// For weights constant in `k` this is `Σ_{k=1}^{|n|} |ε_{k-1} - ε_k| Ω
/// + Ω + ε_0 Ω`; the last term comes from `E_0(f w_n)` and is needed
/// whenever `n` is odd (`n = 2^m - 1` attains `2Ω`).
pub fn domination_constant(n: WalshIndex, omega: &WeightFamily) -> Result<f64> {
    let top = n.order()?;
    let w = |k: u32| -> Result<f64> {
        Ok(if n.digit(k) == 1 { omega.omega(k, n.value())? } else { 0.0 })
    };
    let mut c = omega.omega(top, n.value())? + w(0)?;
    for k in 1..=top {
        c += (w(k - 1)? - w(k)?).abs();
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_grid, random_nonneg_grid};
    use crate::transform::{fwht, inverse_fwht, xor_convolve};
    use crate::walsh::{dirichlet, partial_sum, rademacher, walsh};
    use proptest::prelude::*;

    fn ones() -> WeightFamily {
        WeightFamily::Ones
    }

    #[test]
    fn extreme_levels() {
        let f = random_grid(7, 1);
        let e0 = cond_exp(&f, 0).unwrap();
        assert!(e0.samples().iter().all(|&v| (v - f.mean()).abs() < 1e-15));
        assert_eq!(cond_exp(&f, 7).unwrap(), f);
        assert!(cond_exp(&f, 8).is_err());
        assert!(mdiff(&f, 7).is_err());
    }

    #[test]
    fn cond_exp_is_dirichlet_convolution() {
        let f = random_grid(8, 2);
        for k in 0..=8 {
            let a = cond_exp(&f, k).unwrap();
            let b = xor_convolve(&f, &dirichlet(1 << k, 8).unwrap()).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn block_means_agree_with_cond_exp() {
        let f = random_grid(6, 3);
        let bm = BlockMeans::new(&f);
        for k in 0..=6 {
            let e = cond_exp(&f, k).unwrap();
            for i in 0..64 {
                assert!((bm.at(k, i) - e.get(i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn differences_telescope_and_band_limit() {
        let f = random_grid(8, 4);
        let mut acc = DyadicGrid::zeros(8).unwrap();
        for k in 0..8 {
            acc = acc.add(&mdiff(&f, k).unwrap()).unwrap();
        }
        let want = f.map(|v| v - f.mean());
        assert!(acc.max_abs_diff(&want).unwrap() < 1e-12);

        for m in 1..256u64 {
            let w = walsh(m, 8).unwrap();
            for k in 0..8u32 {
                let d = mdiff(&w, k).unwrap();
                let inside = (1u64 << k) <= m && m < (1u64 << (k + 1));
                let want = if inside { w.clone() } else { DyadicGrid::zeros(8).unwrap() };
                assert!(d.max_abs_diff(&want).unwrap() < 1e-12);
            }
        }
        let c = DyadicGrid::constant(5, 3.0).unwrap();
        assert_eq!(mdiff(&c, 2).unwrap().linf(), 0.0);
    }

    #[test]
    fn doob_examples() {
        let c = DyadicGrid::constant(5, -2.0).unwrap();
        assert!(doob_max(&c).samples().iter().all(|&v| v == 2.0));
        for n in 1..64u64 {
            let e = doob_max(&walsh(n, 6).unwrap());
            assert!(e.samples().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn doob_weak_type_exhaustive() {
        for seed in 0..10 {
            let f = random_nonneg_grid(10, seed);
            assert!(doob_max(&f).weak_l1() <= f.l1() + 1e-12);
        }
    }

    #[test]
    fn square_function_examples() {
        let c = DyadicGrid::constant(4, -1.5).unwrap();
        assert!(square_function(&c).samples().iter().all(|&v| (v - 1.5).abs() < 1e-15));
        assert_eq!(SquareFunction::without_mean().apply(&c).linf(), 0.0);
        for m in 1..64u64 {
            let s = square_function(&walsh(m, 6).unwrap());
            assert!(s.samples().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
        for seed in 0..5 {
            let f = random_grid(8, seed);
            assert!(f.l1() <= h1_norm(&f) + 1e-12);
        }
    }

    #[test]
    fn paley_identity_small() {
        let f = random_grid(6, 9);
        for n in 1..64u64 {
            let m = mtransform(&f, WalshIndex::from(n), &ones()).unwrap();
            let lhs = m.grid.mul(&walsh(n, 6).unwrap()).unwrap();
            let s = partial_sum(&f, n).unwrap();
            assert!(lhs.max_abs_diff(&s).unwrap() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn single_digit_transform() {
        let f = random_grid(7, 10);
        for k in 0..7u32 {
            let m = mtransform(&f, WalshIndex::from(1u64 << k), &ones()).unwrap();
            let want = mdiff(&f.mul(&rademacher(k, 7).unwrap()).unwrap(), k).unwrap();
            assert!(m.grid.max_abs_diff(&want).unwrap() < 1e-14);
            let p = carleson_kernel(WalshIndex::from(1u64 << k), &ones(), 7).unwrap();
            let want = rademacher(k, 7).unwrap().mul(&dirichlet(1 << k, 7).unwrap()).unwrap();
            assert_eq!(p, want);
        }
    }

    #[test]
    fn linear_in_weights() {
        let f = random_grid(6, 12);
        let w = WeightFamily::Harmonic;
        let scaled = WeightFamily::Scaled { factor: 2.5, inner: Box::new(w.clone()) };
        for n in [5u64, 21, 63] {
            let a = mtransform(&f, WalshIndex::from(n), &w).unwrap().grid.scale(2.5);
            let b = mtransform(&f, WalshIndex::from(n), &scaled).unwrap().grid;
            assert!(a.max_abs_diff(&b).unwrap() < 1e-13);
        }
    }

    #[test]
    fn kernel_spectrum_bands() {
        let p = carleson_kernel(WalshIndex::from(21u64), &ones(), 8).unwrap();
        let s = fwht(&p);
        for (l, c) in s.coefficients().iter().enumerate() {
            let band = if l == 0 { None } else { Some(63 - (l as u64).leading_zeros()) };
            let want = match band {
                Some(k) if (21 >> k) & 1 == 1 => 1.0,
                _ => 0.0,
            };
            assert!((c - want).abs() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn carleson_max_examples() {
        let f = random_grid(8, 13);
        let single = carleson_max(&f, &ones(), &IndexSet::new(vec![37]).unwrap()).unwrap();
        let m = mtransform(&f, WalshIndex::from(37u64), &ones()).unwrap();
        assert_eq!(single.grid, m.grid.abs());

        let all = carleson_max(&f, &ones(), &IndexSet::range(1, 256).unwrap()).unwrap();
        let mut sweep = vec![0.0f64; 256];
        for n in 1..256 {
            let s = partial_sum(&f, n).unwrap();
            for (a, v) in sweep.iter_mut().zip(s.samples()) {
                *a = a.max(v.abs());
            }
        }
        for (a, b) in all.grid.samples().iter().zip(&sweep) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(carleson_max(&f, &ones(), &IndexSet::new(vec![256]).unwrap()).is_err());
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![]).is_err());
        assert!(IndexSet::new(vec![0, 1]).is_err());
        assert!(IndexSet::new(vec![3, 3]).is_err());
        let s: IndexSet = serde_json::from_str("[1,4,9]").unwrap();
        assert_eq!(s.max(), 9);
        assert!(serde_json::from_str::<IndexSet>("[4,1]").is_err());
    }

    #[test]
    fn sidecar_fields() {
        let f = random_grid(4, 1);
        let m = mtransform(&f, WalshIndex::from(5u64), &ones()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.sidecar_json().unwrap()).unwrap();
        assert_eq!(v["operator"], "martingale_transform");
        assert_eq!(v["n"], 5);
        assert_eq!(v["weights"], "ones");
        assert_eq!(v["resolution"], 4);
    }

    #[test]
    fn transform_index_bounds() {
        let f = random_grid(4, 1);
        assert!(mtransform(&f, WalshIndex::from(16u64), &ones()).is_err());
        assert!(mtransform(&f, WalshIndex::from(0u64), &ones()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn domination(seed in any::<u64>(), n in 1u64..512) {
            let f = random_grid(9, seed);
            let e = doob_max(&f.abs());
            for omega in [WeightFamily::Ones, WeightFamily::Harmonic, WeightFamily::t3(2.0)] {
                let c = domination_constant(WalshIndex::from(n), &omega).unwrap();
                let m = mtransform(&f, WalshIndex::from(n), &omega).unwrap();
                for (v, b) in m.grid.samples().iter().zip(e.samples()) {
                    prop_assert!(v.abs() <= b * c + 1e-12);
                }
            }
        }

        #[test]
        fn depends_only_on_selected_bands(seed in any::<u64>(), n in 1u64..256) {
            let res = 8;
            let f = random_grid(res, seed);
            let omega = WeightFamily::Harmonic;
            let m = mtransform(&f, WalshIndex::from(n), &omega).unwrap().grid;
            // M_n depends on f̂ only at frequencies l with l ⊕ n in a selected band.
            let mut s = fwht(&f);
            s.multiply(|l| {
                let j = (l as u64) ^ n;
                if j == 0 { return 0.0; }
                let band = 63 - j.leading_zeros();
                if (n >> band) & 1 == 1 { 1.0 } else { 0.0 }
            });
            let g = inverse_fwht(&s);
            let mg = mtransform(&g, WalshIndex::from(n), &omega).unwrap().grid;
            prop_assert!(m.max_abs_diff(&mg).unwrap() <= 1e-10);
        }

        #[test]
        fn convolution_representation(seed in any::<u64>(), n in 1u64..1024) {
            let res = 10;
            let f = random_grid(res, seed);
            let omega = WeightFamily::Harmonic;
            let m = mtransform(&f, WalshIndex::from(n), &omega).unwrap().grid;
            let p = carleson_kernel(WalshIndex::from(n), &omega, res).unwrap();
            let c = xor_convolve(&f.mul(&walsh(n, res).unwrap()).unwrap(), &p).unwrap();
            prop_assert!(m.max_abs_diff(&c).unwrap() <= 1e-9);
        }

        #[test]
        fn carleson_max_monotone(seed in any::<u64>(), cut in 2u64..60) {
            let f = random_grid(6, seed);
            let small = carleson_max(&f, &WeightFamily::Ones, &IndexSet::range(1, cut).unwrap()).unwrap();
            let big = carleson_max(&f, &WeightFamily::Ones, &IndexSet::range(1, 64).unwrap()).unwrap();
            for (a, b) in small.grid.samples().iter().zip(big.grid.samples()) {
                prop_assert!(a <= b);
            }
        }
    }
}
