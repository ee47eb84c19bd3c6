//! Parameter sequences for the summability families and the special
//! numbers they need (harmonic numbers, Cesàro numbers `A_m^β`).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Shared closure used by the `Custom` variants. Not serializable.
#[derive(Clone)]
pub struct Callable<T>(pub Arc<dyn Fn(u64) -> T + Send + Sync>);

impl<T> Callable<T> {
    pub fn new(f: impl Fn(u64) -> T + Send + Sync + 'static) -> Self {
        Callable(Arc::new(f))
    }

    pub fn call(&self, n: u64) -> T {
        (self.0)(n)
    }
}

impl<T> fmt::Debug for Callable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<closure>")
    }
}

impl<T> PartialEq for Callable<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

fn table_get<T: Copy>(table: &[T], n: u64, what: &str) -> Result<T> {
    table.get(n as usize).copied().ok_or_else(|| {
        Error::invalid(format!("{what} table has {} entries, index {n} requested", table.len()))
    })
}

/// `λ_n` for de la Vallée Poussin means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// `⌈n/2⌉`
    CeilHalf,
    /// `⌊√n⌋`
    FloorSqrt,
    Table(Vec<u64>),
    #[serde(skip)]
    Custom(Callable<u64>),
}

impl LambdaRule {
    pub fn value(&self, n: u64) -> Result<u64> {
        Ok(match self {
            LambdaRule::CeilHalf => n.div_ceil(2),
            LambdaRule::FloorSqrt => n.isqrt(),
            LambdaRule::Table(t) => table_get(t, n, "lambda")?,
            LambdaRule::Custom(f) => f.call(n),
        })
    }

    pub fn tag(&self) -> String {
        match self {
            LambdaRule::CeilHalf => "ceil_half".into(),
            LambdaRule::FloorSqrt => "floor_sqrt".into(),
            LambdaRule::Table(t) => format!("table[{}]", t.len()),
            LambdaRule::Custom(_) => "custom".into(),
        }
    }
}

/// `α_n` for Cesàro means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    Const(f64),
    /// `α_n = 1/log₂ n`, capped at 1 (so `α_1 = α_2 = 1`).
    InvLog2,
    Table(Vec<f64>),
    #[serde(skip)]
    Custom(Callable<f64>),
}

impl AlphaRule {
    pub fn value(&self, n: u64) -> Result<f64> {
        Ok(match self {
            AlphaRule::Const(a) => *a,
            AlphaRule::InvLog2 => {
                if n <= 2 {
                    1.0
                } else {
                    (1.0 / (n as f64).log2()).min(1.0)
                }
            }
            AlphaRule::Table(t) => table_get(t, n, "alpha")?,
            AlphaRule::Custom(f) => f.call(n),
        })
    }

    pub fn tag(&self) -> String {
        match self {
            AlphaRule::Const(a) => format!("{a}"),
            AlphaRule::InvLog2 => "inv_log2".into(),
            AlphaRule::Table(t) => format!("table[{}]", t.len()),
            AlphaRule::Custom(_) => "custom".into(),
        }
    }
}

/// The generating sequence `q_k` of a Nörlund mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NorlundRule {
    /// `q_k = 1`
    Ones,
    /// `q_k = 1/(k+1)`
    Harmonic,
    /// `q_k = ratio^k`, `0 < ratio ≤ 1`
    Geometric { ratio: f64 },
    Table(Vec<f64>),
    #[serde(skip)]
    Custom(Callable<f64>),
}

impl NorlundRule {
    pub fn q(&self, k: u64) -> Result<f64> {
        Ok(match self {
            NorlundRule::Ones => 1.0,
            NorlundRule::Harmonic => 1.0 / (k as f64 + 1.0),
            NorlundRule::Geometric { ratio } => ratio.powf(k as f64),
            NorlundRule::Table(t) => table_get(t, k, "q")?,
            NorlundRule::Custom(f) => f.call(k),
        })
    }

    /// `Q_m = Σ_{k≤m} q_k`, in closed form where one exists.
    pub fn big_q(&self, m: u64) -> Result<f64> {
        Ok(match self {
            NorlundRule::Ones => m as f64 + 1.0,
            NorlundRule::Harmonic => harmonic(m + 1),
            NorlundRule::Geometric { ratio } if *ratio == 1.0 => m as f64 + 1.0,
            NorlundRule::Geometric { ratio } => {
                -(ratio.ln() * (m as f64 + 1.0)).exp_m1() / (1.0 - ratio)
            }
            _ => {
                let mut s = 0.0;
                for k in 0..=m {
                    s += self.q(k)?;
                }
                s
            }
        })
    }

    /// Checks `q_0 > 0`, `q ≥ 0` and `q` nonincreasing on `0..=upto`.
    pub fn validate(&self, upto: u64) -> Result<()> {
        if let NorlundRule::Geometric { ratio } = self {
            if !(*ratio > 0.0 && *ratio <= 1.0) {
                return Err(Error::invalid(format!("geometric ratio must lie in (0,1], got {ratio}")));
            }
            return Ok(());
        }
        let mut prev = self.q(0)?;
        if !(prev > 0.0 && prev.is_finite()) {
            return Err(Error::invalid(format!("q_0 must be positive, got {prev}")));
        }
        for k in 1..=upto {
            let q = self.q(k)?;
            if !(q >= 0.0) {
                return Err(Error::invalid(format!("q_{k} = {q} is negative")));
            }
            if q > prev {
                return Err(Error::invalid(format!("q is increasing at k = {k} ({prev} < {q})")));
            }
            prev = q;
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        match self {
            NorlundRule::Ones => "ones".into(),
            NorlundRule::Harmonic => "harmonic".into(),
            NorlundRule::Geometric { ratio } => format!("geometric:{ratio}"),
            NorlundRule::Table(t) => format!("table[{}]", t.len()),
            NorlundRule::Custom(_) => "custom".into(),
        }
    }
}

/// Parses `ones`, `harmonic`, `geometric:<r>`.
impl std::str::FromStr for NorlundRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unknown Nörlund sequence `{s}`"));
        Ok(match s.split_once(':') {
            None if s == "ones" => NorlundRule::Ones,
            None if s == "harmonic" => NorlundRule::Harmonic,
            Some(("geometric", r)) => NorlundRule::Geometric { ratio: r.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        })
    }
}

const HARMONIC_TABLE: usize = 1 << 20;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn harmonic_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(HARMONIC_TABLE + 1);
        let mut s = 0.0;
        t.push(0.0);
        for k in 1..=HARMONIC_TABLE {
            s += 1.0 / k as f64;
            t.push(s);
        }
        t
    })
}

/// `H_m = Σ_{k=1}^{m} 1/k`. Summed exactly up to `2^20`, asymptotic above
/// (error below `1e-30` there).
pub fn harmonic(m: u64) -> f64 {
    if (m as usize) <= HARMONIC_TABLE {
        return harmonic_table()[m as usize];
    }
    let x = m as f64;
    let x2 = x * x;
    x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
}

const A_DIRECT: u64 = 10_000;

/// `lnΓ(x+a) - lnΓ(x)` for large `x`, from the Stirling series.
fn ln_gamma_shift(x: f64, a: f64) -> f64 {
    let y = x + a;
    (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + (1.0 / (12.0 * y) - 1.0 / (12.0 * x))
        - (1.0 / (360.0 * y * y * y) - 1.0 / (360.0 * x * x * x))
}

/// `ln A_m^β` with `A_m^β = (β+1)⋯(β+m)/m!`, `β > -1`.
pub fn ln_cesaro_number(beta: f64, m: u64) -> f64 {
    let direct = m.min(A_DIRECT);
    let mut s = 0.0;
    for j in 1..=direct {
        s += (beta / j as f64).ln_1p();
    }
    if m > A_DIRECT {
        // A_m = Γ(m+β+1)/(Γ(m+1)Γ(β+1)): continue from A_{A_DIRECT}.
        let (x1, x0) = (m as f64 + 1.0, A_DIRECT as f64 + 1.0);
        s += ln_gamma_shift(x1, beta) - ln_gamma_shift(x0, beta);
    }
    s
}

/// `A_m^β`. Exact for `β = 0` and `β = 1`.
pub fn cesaro_number(beta: f64, m: u64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    if beta == 1.0 {
        return m as f64 + 1.0;
    }
    if m <= A_DIRECT {
        let mut a = 1.0;
        for j in 1..=m {
            a *= (beta + j as f64) / j as f64;
        }
        return a;
    }
    ln_cesaro_number(beta, m).exp()
}

/// `A_0^β, …, A_m^β` by the recurrence `A_j = A_{j-1}(β+j)/j`, switching to
/// log space beyond `10^4` terms.
pub fn cesaro_numbers(beta: f64, m: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize + 1);
    if m <= A_DIRECT {
        let mut a = 1.0;
        out.push(a);
        for j in 1..=m {
            a *= (beta + j as f64) / j as f64;
            out.push(a);
        }
    } else {
        let mut la = 0.0f64;
        out.push(1.0);
        for j in 1..=m {
            la += (beta / j as f64).ln_1p();
            out.push(la.exp());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_exact_and_asymptotic_agree() {
        let exact: f64 = (1..=(HARMONIC_TABLE as u64 + 5000)).map(|k| 1.0 / k as f64).sum();
        let asym = harmonic(HARMONIC_TABLE as u64 + 5000);
        assert!((exact - asym).abs() < 1e-12);
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(0), 0.0);
    }

    #[test]
    fn cesaro_numbers_product_formula() {
        assert_eq!(cesaro_number(1.0, 10), 11.0);
        assert_eq!(cesaro_number(0.0, 10), 1.0);
        let a = cesaro_number(0.5, 3);
        assert!((a - 1.5 * 2.5 * 3.5 / 6.0).abs() < 1e-15);
        let v = cesaro_numbers(-0.5, 5);
        for (m, x) in v.iter().enumerate() {
            assert!((x - cesaro_number(-0.5, m as u64)).abs() < 1e-15);
        }
    }

    #[test]
    fn cesaro_log_space_continuity() {
        for beta in [0.3, 0.5, 0.9, -0.4] {
            let m = A_DIRECT + 50_000;
            let mut s = 0.0;
            for j in 1..=m {
                s += (beta / j as f64).ln_1p();
            }
            assert!((ln_cesaro_number(beta, m) - s).abs() < 1e-10, "beta={beta}");
        }
    }

    #[test]
    fn q_sums() {
        assert_eq!(NorlundRule::Ones.big_q(4).unwrap(), 5.0);
        let r = NorlundRule::Geometric { ratio: 0.5 };
        assert!((r.big_q(3).unwrap() - 1.875).abs() < 1e-15);
        assert!((NorlundRule::Harmonic.big_q(2).unwrap() - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
        let t = NorlundRule::Table(vec![1.0, 0.5, 0.25]);
        assert_eq!(t.big_q(2).unwrap(), 1.75);
        assert!(NorlundRule::Table(vec![1.0, 2.0]).validate(1).is_err());
        assert!(NorlundRule::Geometric { ratio: 1.5 }.validate(3).is_err());
    }

    #[test]
    fn rule_values() {
        assert_eq!(LambdaRule::CeilHalf.value(7).unwrap(), 4);
        assert_eq!(LambdaRule::FloorSqrt.value(17).unwrap(), 4);
        assert_eq!(AlphaRule::InvLog2.value(1).unwrap(), 1.0);
        assert_eq!(AlphaRule::InvLog2.value(16).unwrap(), 0.25);
        assert!(LambdaRule::Table(vec![1]).value(3).is_err());
    }
}
