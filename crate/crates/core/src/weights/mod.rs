//! Weight families `Ω_k(n)`, cones near the top dyadic scale, and the
//! finite-range checks built on them.

mod conditions;
mod prop2;

pub use conditions::*;
pub use prop2::*;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::{order_of, WalshIndex};
use crate::random::seeded_rng;
use crate::summability::SummabilityMatrix;
use rand::Rng;

/// User-supplied `Ω_k(n)`.
#[derive(Clone)]
pub struct CustomWeights {
    pub name: String,
    pub f: Arc<dyn Fn(u32, u128) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomWeights({})", self.name)
    }
}

impl PartialEq for CustomWeights {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

/// A provider of weights `Ω_k(n)`, `0 ≤ k ≤ |n|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightFamily {
    /// `Ω ≡ 1`
    Ones,
    /// `Ω_k(n) = 1/(|n| - k + 1)`
    Harmonic,
    /// `Ω_s(n) = T̃_{2^s,n}`
    Matrix(SummabilityMatrix),
    /// `Ω_s(n) = T̃_{n(s),n}`, the weights that appear in the third part of
    /// the kernel decomposition.
    MatrixDigits(SummabilityMatrix),
    /// `Ω_k(n) = L^{-ω_n}` for `k ≤ |n| - ω_n` and `L^{k-|n|}` above, with
    /// `ω_n = ⌊½ log_L(|n|+1)⌋`.
    SplitGeometric { base: f64 },
    Scaled { factor: f64, inner: Box<WeightFamily> },
    Custom(CustomWeights),
}

/// `ω_n = ⌊½ log_L(m+1)⌋` for order `m`, computed as the largest `ω` with
/// `L^{2ω} ≤ m+1`.
pub fn half_log_width(m: u32, base: f64) -> u32 {
    let target = m as f64 + 1.0;
    let mut w = 0u32;
    while base.powi(2 * (w as i32 + 1)) <= target {
        w += 1;
    }
    w
}

impl WeightFamily {
    /// The family used in the counterexample of the top-scale theorem: `L > 1`.
    pub fn t3(base: f64) -> Self {
        WeightFamily::SplitGeometric { base }
    }

    pub fn custom(name: &str, f: impl Fn(u32, u128) -> f64 + Send + Sync + 'static) -> Self {
        WeightFamily::Custom(CustomWeights { name: name.into(), f: Arc::new(f) })
    }

    pub fn id(&self) -> String {
        match self {
            WeightFamily::Ones => "ones".into(),
            WeightFamily::Harmonic => "harmonic".into(),
            WeightFamily::Matrix(t) => format!("matrix:{}", t.id()),
            WeightFamily::MatrixDigits(t) => format!("matrix_digits:{}", t.id()),
            WeightFamily::SplitGeometric { base } => format!("t3:{base}"),
            WeightFamily::Scaled { factor, inner } => format!("scaled:{factor}:{}", inner.id()),
            WeightFamily::Custom(c) => format!("custom:{}", c.name),
        }
    }

    /// Whether `Ω_k(n)` depends on `n` only through `|n|`.
    pub fn order_only(&self) -> bool {
        match self {
            WeightFamily::Ones | WeightFamily::Harmonic | WeightFamily::SplitGeometric { .. } => true,
            WeightFamily::Scaled { inner, .. } => inner.order_only(),
            _ => false,
        }
    }

    /// Matrix-derived weights may vanish at `k = 0` (Nörlund-log has
    /// `T̃_{1,n} = t_{n,n} = 0`); every other family is strictly positive.
    pub fn allows_zero(&self) -> bool {
        match self {
            WeightFamily::Matrix(_) | WeightFamily::MatrixDigits(_) => true,
            WeightFamily::Scaled { inner, .. } => inner.allows_zero(),
            _ => false,
        }
    }

    pub fn omega(&self, k: u32, n: u128) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("weights need n ≥ 1".into()));
        }
        let m = order_of(n);
        if k > m {
            return Err(Error::Domain(format!("Ω_k(n) needs k ≤ |n| (k={k}, |n|={m})")));
        }
        let small = || {
            u64::try_from(n).map_err(|_| Error::invalid(format!("matrix weights need n < 2^64, got {n}")))
        };
        Ok(match self {
            WeightFamily::Ones => 1.0,
            WeightFamily::Harmonic => 1.0 / (m - k + 1) as f64,
            WeightFamily::Matrix(t) => t.tilde(1u64 << k, small()?)?,
            WeightFamily::MatrixDigits(t) => {
                let n = small()?;
                t.tilde(WalshIndex::from(n).lower(k) as u64, n)?
            }
            WeightFamily::SplitGeometric { base } => {
                let w = half_log_width(m, *base);
                if k + w <= m {
                    base.powi(-(w as i32))
                } else {
                    base.powi(k as i32 - m as i32)
                }
            }
            WeightFamily::Scaled { factor, inner } => factor * inner.omega(k, n)?,
            WeightFamily::Custom(c) => (c.f)(k, n),
        })
    }

    /// `Ω_0(n), …, Ω_{|n|}(n)`.
    pub fn profile(&self, n: u128) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("weights need n ≥ 1".into()));
        }
        (0..=order_of(n)).map(|k| self.omega(k, n)).collect()
    }

    /// Checks `Ω_{k-1}(n) ≤ Ω_k(n)` and positivity (nonnegativity for
    /// matrix-derived weights) at one `n`.
    pub fn check_monotone(&self, n: u128) -> Result<()> {
        let p = self.profile(n)?;
        for (k, &v) in p.iter().enumerate() {
            let ok = if self.allows_zero() { v >= 0.0 } else { v > 0.0 };
            if !ok || !v.is_finite() {
                return Err(Error::invalid(format!("{}: Ω_{k}({n}) = {v}", self.id())));
            }
            if k > 0 && p[k - 1] > v {
                return Err(Error::invalid(format!(
                    "{}: Ω_{}({n}) = {} > Ω_{k}({n}) = {v}",
                    self.id(),
                    k - 1,
                    p[k - 1]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Parses `ones`, `harmonic`, `matrix:<matrix>`, `matrix_digits:<matrix>`,
/// `t3:<L>`, `scaled:<c>:<family>`.
impl FromStr for WeightFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::invalid(format!("unknown weight family `{s}`"));
        Ok(match head {
            "ones" if rest.is_empty() => WeightFamily::Ones,
            "harmonic" if rest.is_empty() => WeightFamily::Harmonic,
            "matrix" => WeightFamily::Matrix(rest.parse()?),
            "matrix_digits" => WeightFamily::MatrixDigits(rest.parse()?),
            "t3" => {
                let base: f64 = rest.parse().map_err(|_| bad())?;
                t3_family(base)?
            }
            "scaled" => {
                let (c, inner) = rest.split_once(':').ok_or_else(bad)?;
                WeightFamily::Scaled {
                    factor: c.parse().map_err(|_| bad())?,
                    inner: Box::new(inner.parse()?),
                }
            }
            _ => return Err(bad()),
        })
    }
}

impl TryFrom<String> for WeightFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightFamily> for String {
    fn from(w: WeightFamily) -> String {
        w.id()
    }
}

/// The counterexample family with ratio `L` on the top `ω_n` levels.
pub fn t3_family(base: f64) -> Result<WeightFamily> {
    if !(base > 1.0 && base.is_finite()) {
        return Err(Error::invalid(format!("t3 family needs L > 1, got {base}")));
    }
    Ok(WeightFamily::SplitGeometric { base })
}

/// Width sequence `ω_n` of a `Δ_ω` cone, as a function of `|n|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// `⌊½ log_L(|n|+1)⌋`
    HalfLog { base: f64 },
    /// `⌊√|n|⌋`
    Sqrt,
    /// Indexed by `|n|`.
    Table(Vec<u32>),
}

impl OmegaRule {
    pub fn width(&self, m: u32) -> Result<u32> {
        Ok(match self {
            OmegaRule::HalfLog { base } => half_log_width(m, *base),
            OmegaRule::Sqrt => m.isqrt(),
            OmegaRule::Table(t) => *t.get(m as usize).ok_or_else(|| {
                Error::invalid(format!("omega table has {} entries, |n| = {m} requested", t.len()))
            })?,
        })
    }
}

/// `Δ_κ = {κ|n| < k ≤ |n|}` or `Δ_ω = {|n| - ω_n < k ≤ |n|}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ConeSpec {
    Kappa { kappa: f64 },
    Omega { rule: OmegaRule },
}

impl ConeSpec {
    pub fn kappa(kappa: f64) -> Self {
        ConeSpec::Kappa { kappa }
    }

    pub fn omega(rule: OmegaRule) -> Self {
        ConeSpec::Omega { rule }
    }

    pub fn contains(&self, k: u32, m: u32) -> Result<bool> {
        if k > m {
            return Ok(false);
        }
        Ok(match self {
            ConeSpec::Kappa { kappa } => (k as f64) > kappa * m as f64,
            ConeSpec::Omega { rule } => k + rule.width(m)? > m,
        })
    }

    /// Lowest `k` in the cone at order `m`.
    pub fn lowest(&self, m: u32) -> Result<u32> {
        Ok(match self {
            ConeSpec::Kappa { kappa } => ((kappa * m as f64).floor() as u32 + 1).min(m + 1),
            ConeSpec::Omega { rule } => (m + 1).saturating_sub(rule.width(m)?),
        })
    }

    /// `h_Δ(n)`: `⌊(1-κ)|n|/2⌋` or `ω_n`.
    pub fn width(&self, m: u32) -> Result<u32> {
        Ok(match self {
            ConeSpec::Kappa { kappa } => ((1.0 - kappa) * m as f64 / 2.0).floor() as u32,
            ConeSpec::Omega { rule } => rule.width(m)?,
        })
    }

    pub fn id(&self) -> String {
        match self {
            ConeSpec::Kappa { kappa } => format!("kappa:{kappa}"),
            ConeSpec::Omega { rule: OmegaRule::HalfLog { base } } => format!("omega:half_log:{base}"),
            ConeSpec::Omega { rule: OmegaRule::Sqrt } => "omega:sqrt".into(),
            ConeSpec::Omega { rule: OmegaRule::Table(t) } => format!("omega:table[{}]", t.len()),
        }
    }

    /// Validity over the orders `lo..=hi`.
    ///
    /// `κ ∈ (0,1)`. For `Δ_ω`: `ω ≥ 1` everywhere, `ω_n` nondecreasing with
    /// a strict overall increase, and `|n|/ω_n` tending upward in the sense
    /// that its minimum over the upper half of the range exceeds its minimum
    /// over the lower half. Floors such as `⌊√|n|⌋` make `|n|/ω_n` dip
    /// locally, so pointwise monotonicity of the quotient is not required.
    pub fn validate(&self, lo: u32, hi: u32) -> Result<()> {
        if lo > hi {
            return Err(Error::invalid(format!("empty order range {lo}..={hi}")));
        }
        match self {
            ConeSpec::Kappa { kappa } => {
                if !(*kappa > 0.0 && *kappa < 1.0) {
                    return Err(Error::invalid(format!("kappa must lie in (0,1), got {kappa}")));
                }
            }
            ConeSpec::Omega { rule } => {
                let ws: Vec<u32> = (lo..=hi).map(|m| rule.width(m)).collect::<Result<_>>()?;
                if let Some(i) = ws.iter().position(|&w| w == 0) {
                    return Err(Error::invalid(format!("cone is empty at |n| = {}", lo + i as u32)));
                }
                for i in 1..ws.len() {
                    if ws[i] < ws[i - 1] {
                        return Err(Error::invalid(format!("omega decreases at |n| = {}", lo + i as u32)));
                    }
                }
                if hi > lo {
                    let ratio = |i: usize| (lo + i as u32) as f64 / ws[i] as f64;
                    let mid = ws.len() / 2;
                    let low = (0..mid).map(ratio).fold(f64::INFINITY, f64::min);
                    let high = (mid..ws.len()).map(ratio).fold(f64::INFINITY, f64::min);
                    if ws[ws.len() - 1] <= ws[0] {
                        return Err(Error::invalid(format!("omega does not grow over {lo}..={hi}")));
                    }
                    if high <= low {
                        return Err(Error::invalid(format!("|n|/omega does not grow over {lo}..={hi}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether every row of `self` lies in `other` at each order of `lo..=hi`.
    pub fn contained_in(&self, other: &ConeSpec, lo: u32, hi: u32) -> Result<bool> {
        for m in lo..=hi {
            for k in self.lowest(m)?..=m {
                if !other.contains(k, m)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Parses `kappa:<κ>`, `omega:sqrt`, `omega:half_log:<L>`.
impl FromStr for ConeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unknown cone `{s}`"));
        Ok(match s.split_once(':').ok_or_else(bad)? {
            ("kappa", k) => ConeSpec::kappa(k.parse().map_err(|_| bad())?),
            ("omega", "sqrt") => ConeSpec::omega(OmegaRule::Sqrt),
            ("omega", r) => match r.split_once(':') {
                Some(("half_log", b)) => ConeSpec::omega(OmegaRule::HalfLog { base: b.parse().map_err(|_| bad())? }),
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }
}

/// Chooses which `n` of each order a scan visits: the corners `2^m`,
/// `2^m + 2^{m-1}`, `2^{m+1} - 1` and `random` seeded draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderSampler {
    pub random: usize,
    pub seed: u64,
}

impl Default for OrderSampler {
    fn default() -> Self {
        OrderSampler { random: 8, seed: 0 }
    }
}

impl OrderSampler {
    pub fn corners_only() -> Self {
        OrderSampler { random: 0, seed: 0 }
    }

    pub fn samples(&self, m: u32) -> Vec<u128> {
        assert!(m < 127);
        let base = 1u128 << m;
        let mut out = vec![base, (base << 1) - 1];
        if m >= 1 {
            out.push(base + (base >> 1));
        }
        let mut rng = seeded_rng(self.seed ^ ((m as u64) << 32));
        for _ in 0..self.random {
            out.push(base + rng.gen_range(0..base));
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
