//! Walsh–Paley and Rademacher functions, Dirichlet and Fejér kernels, and
//! partial sums of Walsh–Fourier series.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::grid::{bitrev, check_resolution, DyadicGrid};
use crate::transform::{fwht, inverse_fwht, SpectrumVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kernel", content = "param", rename_all = "snake_case")]
pub enum Kernel {
    /// `D_n = Σ_{j<n} w_j`.
    Dirichlet(u64),
    /// `n·K_n = Σ_{k=1}^{n} D_k`.
    FejerSum(u64),
    Walsh(u64),
    Rademacher(u32),
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Dirichlet(n) => write!(f, "dirichlet({n})"),
            Kernel::FejerSum(n) => write!(f, "fejer_sum({n})"),
            Kernel::Walsh(n) => write!(f, "walsh({n})"),
            Kernel::Rademacher(k) => write!(f, "rademacher({k})"),
        }
    }
}

/// A grid that remembers which kernel it samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub kernel: Kernel,
    pub grid: DyadicGrid,
}

impl Deref for KernelGrid {
    type Target = DyadicGrid;
    fn deref(&self) -> &DyadicGrid {
        &self.grid
    }
}

impl KernelGrid {
    pub fn new(kernel: Kernel, resolution: u32) -> Result<Self> {
        let grid = match kernel {
            Kernel::Dirichlet(n) => dirichlet(n, resolution)?,
            Kernel::FejerSum(n) => fejer_sum(n, resolution)?,
            Kernel::Walsh(n) => walsh(n, resolution)?,
            Kernel::Rademacher(k) => rademacher(k, resolution)?,
        };
        Ok(KernelGrid { kernel, grid })
    }

    pub fn into_grid(self) -> DyadicGrid {
        self.grid
    }
}

/// `w_n` at sample `i` of a rank-`N` grid.
#[inline]
pub fn walsh_sign(n: u64, i: usize, resolution: u32) -> f64 {
    if (n & bitrev(i, resolution) as u64).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_below(n: u64, resolution: u32, what: &'static str, inclusive: bool) -> Result<()> {
    check_resolution(resolution)?;
    let top = 1u64 << resolution;
    let bad = if inclusive { n > top } else { n >= top };
    if bad {
        return Err(Error::IndexOutOfRange { what, index: n as u128, resolution });
    }
    Ok(())
}

/// `w_n = Π_j r_j^{ε_j(n)}`. Requires `n < 2^N`.
pub fn walsh(n: u64, resolution: u32) -> Result<DyadicGrid> {
    check_below(n, resolution, "walsh index", false)?;
    Ok(DyadicGrid::from_raw(
        resolution,
        (0..1usize << resolution).map(|i| walsh_sign(n, i, resolution)).collect(),
    ))
}

/// `r_k = w_{2^k}`. Requires `k < N`.
pub fn rademacher(k: u32, resolution: u32) -> Result<DyadicGrid> {
    if k >= resolution {
        return Err(Error::IndexOutOfRange { what: "rademacher index", index: k as u128, resolution });
    }
    walsh(1u64 << k, resolution)
}

fn synthesize(resolution: u32, coeff: impl Fn(u64) -> f64) -> DyadicGrid {
    let c = (0..1u64 << resolution).map(coeff).collect();
    inverse_fwht(&SpectrumVector::new(resolution, c).expect("finite coefficients"))
}

/// `D_n = Σ_{j<n} w_j`, `0 ≤ n ≤ 2^N`.
///
/// Summed in the Walsh basis (coefficient 1 on `[0, n)`) and synthesized
/// with one inverse transform; `D_{2^k}` is then checked against
/// `2^k·𝟙_[0,2^-k)` in the tests rather than built from it.
pub fn dirichlet(n: u64, resolution: u32) -> Result<DyadicGrid> {
    check_below(n, resolution, "dirichlet index", true)?;
    Ok(synthesize(resolution, |j| if j < n { 1.0 } else { 0.0 }))
}

/// `n·K_n = Σ_{k=1}^{n} D_k`, `0 ≤ n ≤ 2^N`; `n = 0` gives the zero grid.
///
/// `w_j` occurs in `D_k` for every `k > j`, so its multiplicity in the sum is
/// `n - j` for `j < n`.
pub fn fejer_sum(n: u64, resolution: u32) -> Result<DyadicGrid> {
    check_below(n, resolution, "fejer index", true)?;
    Ok(synthesize(resolution, |j| if j < n { (n - j) as f64 } else { 0.0 }))
}

/// Walsh–Fejér kernel `K_n = (1/n) Σ_{k=1}^{n} D_k`, `n ≥ 1`.
pub fn fejer(n: u64, resolution: u32) -> Result<DyadicGrid> {
    if n == 0 {
        return Err(Error::Domain("K_0 is undefined; use fejer_sum(0)".into()));
    }
    Ok(fejer_sum(n, resolution)?.scale(1.0 / n as f64))
}

/// `S_n f = Σ_{k<n} f̂(k) w_k`, by truncating the spectrum.
pub fn partial_sum(f: &DyadicGrid, n: u64) -> Result<DyadicGrid> {
    check_below(n, f.resolution(), "partial sum index", true)?;
    let mut s = fwht(f);
    s.multiply(|k| if (k as u64) < n { 1.0 } else { 0.0 });
    Ok(inverse_fwht(&s))
}

/// Dirichlet kernels `D_1, …, D_m` by running accumulation of Walsh
/// functions, handed to `visit(k, &D_k)` in order. Used where every
/// intermediate kernel is needed.
pub(crate) fn for_each_dirichlet(m: u64, resolution: u32, mut visit: impl FnMut(u64, &[f64])) {
    let len = 1usize << resolution;
    let mut d = vec![0.0; len];
    for k in 1..=m {
        let j = k - 1;
        for (i, v) in d.iter_mut().enumerate() {
            *v += walsh_sign(j, i, resolution);
        }
        visit(k, &d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_grid;
    use crate::transform::xor_convolve;
    use proptest::prelude::*;

    fn brute_dirichlet(n: u64, res: u32) -> Vec<f64> {
        let mut d = vec![0.0; 1 << res];
        for j in 0..n {
            let w = walsh(j, res).unwrap();
            for (a, b) in d.iter_mut().zip(w.samples()) {
                *a += b;
            }
        }
        d
    }

    #[test]
    fn walsh_zero_and_three() {
        assert!(walsh(0, 5).unwrap().samples().iter().all(|&v| v == 1.0));
        assert_eq!(walsh(3, 2).unwrap().samples(), &[1.0, -1.0, -1.0, 1.0]);
        assert!(walsh(4, 2).is_err());
    }

    #[test]
    fn rademacher_is_digit_sign() {
        let r = rademacher(1, 3).unwrap();
        // x_1 is the second-most significant bit of the sample index.
        assert_eq!(r.samples(), &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn character_property() {
        let res = 10;
        for (a, b) in [(3u64, 1000u64), (513, 77), (1023, 1), (256, 255)] {
            let prod = walsh(a, res).unwrap().mul(&walsh(b, res).unwrap()).unwrap();
            assert_eq!(prod, walsh(a ^ b, res).unwrap());
        }
    }

    #[test]
    fn dirichlet_examples() {
        assert!(dirichlet(1, 4).unwrap().samples().iter().all(|&v| v == 1.0));
        assert_eq!(dirichlet(3, 2).unwrap().samples(), &[3.0, 1.0, 1.0, -1.0]);
        assert!(dirichlet(0, 3).unwrap().samples().iter().all(|&v| v == 0.0));
        assert!(dirichlet(9, 3).is_err());
    }

    #[test]
    fn dirichlet_power_of_two_closed_form() {
        let res = 8;
        for k in 0..=8u32 {
            let d = brute_dirichlet(1 << k, res);
            let width = 1usize << (res - k);
            for (i, v) in d.iter().enumerate() {
                let want = if i < width { (1u64 << k) as f64 } else { 0.0 };
                assert_eq!(*v, want, "k={k} i={i}");
            }
            let fast = dirichlet(1 << k, res).unwrap();
            assert_eq!(fast.samples(), d.as_slice());
            assert_eq!(fast.l1(), 1.0);
        }
    }

    #[test]
    fn fejer_examples() {
        assert!(fejer_sum(1, 3).unwrap().samples().iter().all(|&v| v == 1.0));
        assert_eq!(fejer_sum(3, 2).unwrap().samples(), &[6.0, 4.0, 2.0, 0.0]);
        assert!(fejer_sum(0, 3).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fejer_sum_matches_accumulation() {
        let res = 6;
        let mut acc = vec![0.0; 1 << res];
        for n in 1..=64u64 {
            let d = brute_dirichlet(n, res);
            for (a, b) in acc.iter_mut().zip(&d) {
                *a += b;
            }
            let fast = fejer_sum(n, res).unwrap();
            for (a, b) in fast.samples().iter().zip(&acc) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn running_dirichlet_matches() {
        for_each_dirichlet(20, 5, |k, d| {
            assert_eq!(d, dirichlet(k, 5).unwrap().samples());
        });
    }

    #[test]
    fn dirichlet_integrates_to_one() {
        for n in 1..=256u64 {
            assert_eq!(fwht(&dirichlet(n, 8).unwrap()).coefficients()[0], 1.0);
        }
    }

    #[test]
    fn fejer_l1_bound() {
        for k in 0..=12u32 {
            let l1 = fejer(1 << k, 12).unwrap().l1();
            assert!(l1 <= 2.0 + 1e-12, "k={k}: {l1}");
        }
    }

    #[test]
    fn partial_sum_examples() {
        let w5 = walsh(5, 6).unwrap();
        assert!(partial_sum(&w5, 8).unwrap().max_abs_diff(&w5).unwrap() < 1e-12);
        let f = random_grid(6, 3);
        assert_eq!(partial_sum(&f, 0).unwrap().linf(), 0.0);
        assert!(partial_sum(&f, 64).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn dyadic_partial_sums_are_block_averages() {
        let res = 10;
        let f = random_grid(res, 11);
        for k in 0..=res {
            let width = 1usize << (res - k);
            let s = partial_sum(&f, 1 << k).unwrap();
            for (b, chunk) in f.samples().chunks(width).enumerate() {
                let avg = chunk.iter().sum::<f64>() / width as f64;
                for i in 0..width {
                    assert!((s.get(b * width + i) - avg).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn partial_sum_is_dirichlet_convolution(res in 1u32..=8, seed in any::<u64>()) {
            let f = random_grid(res, seed);
            for n in 0..=(1u64 << res) {
                let a = partial_sum(&f, n).unwrap();
                let b = xor_convolve(&f, &dirichlet(n, res).unwrap()).unwrap();
                prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-9);
            }
        }
    }
}
