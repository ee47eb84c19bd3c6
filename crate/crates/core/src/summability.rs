//! Summability matrices `𝕋 = (t_{k,n})`, their means
//! `𝒯_n f = Σ_{k=1}^{n} t_{k,n} S_k f`, kernels `V_n = Σ_{k=1}^{n} t_{k,n} D_k`,
//! tail sums and the three-part kernel decomposition.
//!
//! Tail sums: `T_n^(m) = Σ_{l=m}^{n} t_{l,n}` and
//! `T̃_{m,n} = Σ_{l=0}^{m-1} t_{n-l,n} = T_n^(n-m+1)`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{check_resolution, DyadicGrid};
use crate::index::order_of;
use crate::sequence::{cesaro_number, cesaro_numbers, harmonic, AlphaRule, LambdaRule, NorlundRule};
use crate::transform::{fwht, inverse_fwht, SpectrumVector};
use crate::walsh::{for_each_dirichlet, walsh_sign};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MatrixFamily {
    /// `t_{k,n} = 𝟙{k = n}`
    PartialSum,
    /// `t_{k,n} = 1/(λ_n+1)` for `n-λ_n ≤ k ≤ n`
    ValleePoussin { lambda: LambdaRule },
    /// `t_{k,n} = A_{n-k}^{α_n-1} / A_n^{α_n}`
    Cesaro { alpha: AlphaRule },
    /// `t_{k,n} = 1/(H_n (n-k))` for `k < n`, `t_{n,n} = 0`
    NorlundLog,
    /// `t_{k,n} = q_{n-k}/Q_n`
    Norlund { q: NorlundRule },
}

impl MatrixFamily {
    pub fn fejer() -> Self {
        MatrixFamily::Cesaro { alpha: AlphaRule::Const(1.0) }
    }

    pub fn id(&self) -> String {
        match self {
            MatrixFamily::PartialSum => "partial_sum".into(),
            MatrixFamily::ValleePoussin { lambda } => format!("vp:{}", lambda.tag()),
            MatrixFamily::Cesaro { alpha } => format!("cesaro:{}", alpha.tag()),
            MatrixFamily::NorlundLog => "norlund_log".into(),
            MatrixFamily::Norlund { q } => format!("norlund:{}", q.tag()),
        }
    }
}

impl fmt::Display for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Parses `partial_sum`, `fejer`, `cesaro:<α>`, `cesaro:inv_log2`,
/// `vp:ceil_half`, `vp:floor_sqrt`, `norlund_log`, `norlund:ones`,
/// `norlund:harmonic`, `norlund:geometric:<r>`.
impl FromStr for MatrixFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::invalid(format!("unknown matrix family `{s}`"));
        Ok(match (head, rest) {
            ("partial_sum", "") => MatrixFamily::PartialSum,
            ("fejer", "") => MatrixFamily::fejer(),
            ("norlund_log", "") => MatrixFamily::NorlundLog,
            ("cesaro", "inv_log2") => MatrixFamily::Cesaro { alpha: AlphaRule::InvLog2 },
            ("cesaro", a) => MatrixFamily::Cesaro {
                alpha: AlphaRule::Const(a.parse().map_err(|_| bad())?),
            },
            ("vp" | "vallee_poussin", "ceil_half") => {
                MatrixFamily::ValleePoussin { lambda: LambdaRule::CeilHalf }
            }
            ("vp" | "vallee_poussin", "floor_sqrt") => {
                MatrixFamily::ValleePoussin { lambda: LambdaRule::FloorSqrt }
            }
            ("norlund", "ones") => MatrixFamily::Norlund { q: NorlundRule::Ones },
            ("norlund", "harmonic") => MatrixFamily::Norlund { q: NorlundRule::Harmonic },
            ("norlund", r) if r.starts_with("geometric:") => MatrixFamily::Norlund {
                q: NorlundRule::Geometric { ratio: r["geometric:".len()..].parse().map_err(|_| bad())? },
            },
            _ => return Err(bad()),
        })
    }
}

/// Which rowwise monotonicity the validator enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    /// `t_{k,n} ≤ t_{k+1,n}` for all `k < n`.
    Full,
    /// As `Full`, except the last step `k = n-1` may decrease.
    ExceptLast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SummabilityMatrix {
    family: MatrixFamily,
}

/// Validating constructor.
pub fn make_matrix(family: MatrixFamily) -> Result<SummabilityMatrix> {
    SummabilityMatrix::new(family)
}

impl FromStr for SummabilityMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SummabilityMatrix::new(s.parse()?)
    }
}

impl SummabilityMatrix {
    pub fn new(family: MatrixFamily) -> Result<Self> {
        match &family {
            MatrixFamily::Cesaro { alpha: AlphaRule::Const(a) } => check_alpha(*a, 0)?,
            MatrixFamily::Cesaro { alpha: AlphaRule::Table(t) } => {
                for (n, &a) in t.iter().enumerate().skip(1) {
                    check_alpha(a, n as u64)?;
                }
            }
            MatrixFamily::ValleePoussin { lambda: LambdaRule::Table(t) } => {
                for (n, &l) in t.iter().enumerate().skip(1) {
                    check_lambda(l, n as u64)?;
                }
            }
            MatrixFamily::Norlund { q } => {
                let upto = match q {
                    NorlundRule::Table(t) => t.len().saturating_sub(1) as u64,
                    _ => 64,
                };
                q.validate(upto)?;
            }
            _ => {}
        }
        Ok(SummabilityMatrix { family })
    }

    pub fn fejer() -> Self {
        SummabilityMatrix { family: MatrixFamily::fejer() }
    }

    pub fn family(&self) -> &MatrixFamily {
        &self.family
    }

    pub fn id(&self) -> String {
        self.family.id()
    }

    pub fn monotonicity(&self) -> Monotonicity {
        match self.family {
            MatrixFamily::NorlundLog => Monotonicity::ExceptLast,
            _ => Monotonicity::Full,
        }
    }

    fn lambda(&self, n: u64) -> Result<u64> {
        let MatrixFamily::ValleePoussin { lambda } = &self.family else { unreachable!() };
        let l = lambda.value(n)?;
        check_lambda(l, n)?;
        Ok(l)
    }

    fn alpha(&self, n: u64) -> Result<f64> {
        let MatrixFamily::Cesaro { alpha } = &self.family else { unreachable!() };
        let a = alpha.value(n)?;
        check_alpha(a, n)?;
        Ok(a)
    }

    /// Row `n`: `t_{0,n}, …, t_{n,n}`. Row 0 is `[1]` for every family.
    pub fn row(&self, n: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Ok(vec![1.0]);
        }
        let len = n as usize + 1;
        Ok(match &self.family {
            MatrixFamily::PartialSum => {
                let mut r = vec![0.0; len];
                r[n as usize] = 1.0;
                r
            }
            MatrixFamily::ValleePoussin { .. } => {
                let l = self.lambda(n)?;
                let v = 1.0 / (l as f64 + 1.0);
                (0..=n).map(|k| if k + l >= n { v } else { 0.0 }).collect()
            }
            MatrixFamily::Cesaro { .. } => {
                let a = self.alpha(n)?;
                let lower = cesaro_numbers(a - 1.0, n);
                let top = cesaro_number(a, n);
                (0..=n).map(|k| lower[(n - k) as usize] / top).collect()
            }
            MatrixFamily::NorlundLog => {
                let h = harmonic(n);
                (0..=n).map(|k| if k < n { 1.0 / (h * (n - k) as f64) } else { 0.0 }).collect()
            }
            MatrixFamily::Norlund { q } => {
                let qs: Vec<f64> = (0..=n).map(|j| q.q(j)).collect::<Result<_>>()?;
                let total: f64 = qs.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::MatrixInvariant { k: 0, n: n as usize, reason: "Q_n = 0".into() });
                }
                (0..=n).map(|k| qs[(n - k) as usize] / total).collect()
            }
        })
    }

    pub fn entry(&self, k: u64, n: u64) -> Result<f64> {
        if k > n {
            return Ok(0.0);
        }
        Ok(self.row(n)?[k as usize])
    }

    /// `T̃_{m,n}` from the closed form of each family, without building the
    /// row. `m` is clamped to `n+1`, where the value is 1.
    pub fn tilde(&self, m: u64, n: u64) -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        if m > n {
            return Ok(1.0);
        }
        Ok(match &self.family {
            MatrixFamily::PartialSum => 1.0,
            MatrixFamily::ValleePoussin { .. } => {
                let l = self.lambda(n)?;
                m.min(l + 1) as f64 / (l as f64 + 1.0)
            }
            MatrixFamily::Cesaro { .. } => {
                let a = self.alpha(n)?;
                cesaro_number(a, m - 1) / cesaro_number(a, n)
            }
            MatrixFamily::NorlundLog => harmonic(m - 1) / harmonic(n),
            MatrixFamily::Norlund { q } => q.big_q(m - 1)? / q.big_q(n)?,
        })
    }

    /// `T_n^(m)`, `0 ≤ m`; zero for `m > n`.
    pub fn tail(&self, m: u64, n: u64) -> Result<f64> {
        if m > n {
            return Ok(0.0);
        }
        self.tilde(n + 1 - m, n)
    }

    /// `Ω_s(n) = T̃_{2^s,n}` for `s = 0..=|n|`.
    pub fn tilde_profile(&self, n: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("tilde profile needs n ≥ 1".into()));
        }
        (0..=order_of(n as u128)).map(|s| self.tilde(1u64 << s, n)).collect()
    }

    /// Row-based tail sums for a single `n`.
    pub fn tail_sums(&self, n: u64) -> Result<TailSums> {
        TailSums::from_row(n, &self.row(n)?)
    }

    /// Checks nonnegativity, rowwise monotonicity (per [`Self::monotonicity`])
    /// and unit row sums (`1e-12`) for every row `1..=n_max`.
    pub fn validate_rows(&self, n_max: u64) -> Result<()> {
        let mono = self.monotonicity();
        for n in 1..=n_max {
            let row = self.row(n)?;
            let bad = |k: usize, reason: String| Error::MatrixInvariant { k, n: n as usize, reason };
            for (k, &t) in row.iter().enumerate() {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(bad(k, format!("entry {t} is not a nonnegative number")));
                }
            }
            for k in 0..n as usize {
                let skip = mono == Monotonicity::ExceptLast && k + 1 == n as usize;
                if !skip && row[k] > row[k + 1] {
                    return Err(bad(k, format!("row decreases: {} > {}", row[k], row[k + 1])));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(bad(0, format!("row sums to {sum}")));
            }
        }
        Ok(())
    }

    /// `Σ_{s=0}^{|n|} T̃_{2^s,n}`, exact summation of closed forms.
    pub fn boundedness_index(&self, n: u64) -> Result<f64> {
        Ok(self.tilde_profile(n)?.iter().sum())
    }

    /// `𝒯_n f`, computed in the Walsh basis: `𝒯_n w_l = T_n^(l+1) w_l` for
    /// `l < n` and `0` for `l ≥ n`. Requires `n ≤ 2^N`.
    pub fn mean(&self, f: &DyadicGrid, n: u64) -> Result<DyadicGrid> {
        check_n(n, f.resolution())?;
        let tails = self.tail_sums(n)?;
        let mut s = fwht(f);
        s.multiply(|l| if (l as u64) < n { tails.tail(l as u64 + 1) } else { 0.0 });
        Ok(inverse_fwht(&s))
    }

    /// `V_n = Σ_{k=1}^{n} t_{k,n} D_k`, synthesized from its coefficients
    /// `T_n^(l+1)`. Satisfies `𝒯_n f = f ∗ V_n`.
    pub fn kernel(&self, n: u64, resolution: u32) -> Result<DyadicGrid> {
        check_resolution(resolution)?;
        check_n(n, resolution)?;
        let tails = self.tail_sums(n)?;
        let c = (0..1u64 << resolution)
            .map(|l| if l < n { tails.tail(l + 1) } else { 0.0 })
            .collect();
        Ok(inverse_fwht(&SpectrumVector::new(resolution, c)?))
    }

    /// `ℒ_n = ‖V_n‖_1`.
    pub fn lebesgue_constant(&self, n: u64, resolution: u32) -> Result<f64> {
        Ok(self.kernel(n, resolution)?.l1())
    }

    /// Splits `w_n V_n` into `V1 + V2 + V3`:
    ///
    /// ```text
    /// V1 = -Σ_s ε_s w_{n(s)} w_{2^s-1} Σ_{k=1}^{2^s-2} (t_{n^(s)-k} - t_{n^(s)-k-1}) k K_k
    /// V2 = -Σ_s ε_s w_{n(s)} w_{2^s-1} t_{n^(s+1)+1} (2^s-1) K_{2^s-1}
    /// V3 =  Σ_s ε_s T_n^(n^(s+1)+1) w_{2^s} D_{2^s}
    /// ```
    ///
    /// The Fejér sums `kK_k` are accumulated from Dirichlet kernels, which
    /// are in turn accumulated from Walsh functions, so nothing here reuses
    /// [`Self::kernel`].
    pub fn decompose(&self, n: u64, resolution: u32) -> Result<Decomposition> {
        check_resolution(resolution)?;
        if n == 0 || n >= 1u64 << resolution {
            return Err(Error::IndexOutOfRange { what: "decomposition index", index: n as u128, resolution });
        }
        let row = self.row(n)?;
        let tails = TailSums::from_row(n, &row)?;
        let len = 1usize << resolution;
        let top = order_of(n as u128);
        let digits: Vec<u32> = (0..=top).filter(|s| (n >> s) & 1 == 1).collect();

        let upper = |s: u32| (n >> s) << s;
        let lower = |s: u32| n & ((2u64 << s) - 1);

        // Inner sums of V1 and the boundary Fejér sums of V2, per digit.
        let mut inner: Vec<Vec<f64>> = digits.iter().map(|_| vec![0.0; len]).collect();
        let mut boundary: Vec<Vec<f64>> = digits.iter().map(|_| vec![0.0; len]).collect();
        let mut fejer = vec![0.0; len];
        let kmax = (1u64 << top) - 1;
        for_each_dirichlet(kmax, resolution, |k, d| {
            for (a, b) in fejer.iter_mut().zip(d) {
                *a += b;
            }
            for (idx, &s) in digits.iter().enumerate() {
                let width = 1u64 << s;
                if k + 2 <= width {
                    let us = upper(s);
                    let c = row[(us - k) as usize] - row[(us - k - 1) as usize];
                    if c != 0.0 {
                        for (a, b) in inner[idx].iter_mut().zip(&fejer) {
                            *a += c * b;
                        }
                    }
                } else if k + 1 == width {
                    boundary[idx].copy_from_slice(&fejer);
                }
            }
        });

        let mut v1 = vec![0.0; len];
        let mut v2 = vec![0.0; len];
        let mut v3 = vec![0.0; len];
        for (idx, &s) in digits.iter().enumerate() {
            let sign_index = lower(s) ^ ((1u64 << s) - 1);
            let t_boundary = row[(upper(s + 1) + 1) as usize];
            let weight = tails.tail(upper(s + 1) + 1);
            let scale = (1u64 << s) as f64;
            let support = len >> s;
            let bit = resolution - 1 - s;
            for i in 0..len {
                let sg = walsh_sign(sign_index, i, resolution);
                v1[i] -= sg * inner[idx][i];
                v2[i] -= sg * t_boundary * boundary[idx][i];
                if i < support {
                    v3[i] += if (i >> bit) & 1 == 0 { weight * scale } else { -weight * scale };
                }
            }
        }

        let kernel = self.kernel(n, resolution)?;
        let target = (0..len).map(|i| walsh_sign(n, i, resolution) * kernel.get(i)).collect();
        Ok(Decomposition {
            n,
            v1: DyadicGrid::from_raw(resolution, v1),
            v2: DyadicGrid::from_raw(resolution, v2),
            v3: DyadicGrid::from_raw(resolution, v3),
            target: DyadicGrid::from_raw(resolution, target),
        })
    }
}

fn check_alpha(a: f64, n: u64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::invalid(format!("alpha_{n} = {a} is outside (0, 1]")));
    }
    Ok(())
}

fn check_lambda(l: u64, n: u64) -> Result<()> {
    if n >= 1 && (l < 1 || l > n) {
        return Err(Error::invalid(format!("lambda_{n} = {l} is outside [1, {n}]")));
    }
    Ok(())
}

fn check_n(n: u64, resolution: u32) -> Result<()> {
    if n > 1u64 << resolution {
        return Err(Error::IndexOutOfRange { what: "mean index", index: n as u128, resolution });
    }
    Ok(())
}

/// Suffix sums of one row, accumulated from the top entry down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSums {
    pub n: u64,
    /// `suffix[m] = T_n^(m)` for `0 ≤ m ≤ n+1`.
    pub suffix: Vec<f64>,
}

impl TailSums {
    pub fn from_row(n: u64, row: &[f64]) -> Result<Self> {
        if row.len() != n as usize + 1 {
            return Err(Error::invalid(format!("row {n} has {} entries", row.len())));
        }
        let mut suffix = vec![0.0; row.len() + 1];
        for m in (0..row.len()).rev() {
            suffix[m] = suffix[m + 1] + row[m];
        }
        Ok(TailSums { n, suffix })
    }

    /// `T_n^(m)`.
    pub fn tail(&self, m: u64) -> f64 {
        self.suffix.get(m as usize).copied().unwrap_or(0.0)
    }

    /// `T̃_{m,n}`, with `m` clamped to `n+1`.
    pub fn tilde(&self, m: u64) -> f64 {
        let m = m.min(self.n + 1);
        self.suffix[(self.n + 1 - m) as usize]
    }

    /// `Ω_s(n) = T̃_{2^s,n}`.
    pub fn omega(&self, s: u32) -> f64 {
        self.tilde(1u64.checked_shl(s).unwrap_or(u64::MAX))
    }

    /// `T̃_{2^s,n} ≤ T̃_{n(s),n} ≤ 2 T̃_{2^s,n}`, for a digit `s` of `n`.
    pub fn chain_holds(&self, s: u32) -> bool {
        let lower = self.n & ((2u64 << s) - 1);
        let (a, b) = (self.omega(s), self.tilde(lower));
        a <= b && b <= 2.0 * a
    }
}

/// `w_n V_n` and the three parts that should sum to it.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub n: u64,
    pub v1: DyadicGrid,
    pub v2: DyadicGrid,
    pub v3: DyadicGrid,
    pub target: DyadicGrid,
}

impl Decomposition {
    /// `‖V1 + V2 + V3 - w_n V_n‖_∞ / max(‖V_n‖_∞, 1)`.
    pub fn max_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..self.target.len() {
            let s = self.v1.get(i) + self.v2.get(i) + self.v3.get(i);
            err = err.max((s - self.target.get(i)).abs());
        }
        err / self.target.linf().max(1.0)
    }
}
