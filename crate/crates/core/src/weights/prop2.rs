use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::NorlundRule;

/// Result of the Nörlund subsequence search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Outcome {
    /// `(n_j, γ_j)` with `a_{n_j - γ_j} ≥ ½ a_{n_j}`, `n_j` strictly increasing.
    pub pairs: Vec<(usize, usize)>,
    pub certificate: Option<BoundednessCertificate>,
}

/// Emitted when some gap `m` admits no further index in range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCertificate {
    pub failed_gap: usize,
    /// `sup_n A_n/a_n` with `A_n = Σ_{j≤n} a_j`.
    pub sup_ratio: f64,
    pub argmax: usize,
}

/// `a_k = Q_{2^k}` for `k = 0..=kmax` (`kmax ≤ 62`).
pub fn norlund_dyadic_sequence(q: &NorlundRule, kmax: u32) -> Result<Vec<f64>> {
    if kmax > 62 {
        return Err(Error::invalid("norlund dyadic sequence supports k ≤ 62"));
    }
    (0..=kmax).map(|k| q.big_q(1u64 << k)).collect()
}

fn check_sequence(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid("empty sequence"));
    }
    for (k, w) in a.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::invalid(format!("sequence decreases at k = {}", k + 1)));
        }
    }
    if !(a[0] > 0.0) {
        return Err(Error::invalid("sequence must be positive"));
    }
    Ok(())
}

/// For `m = 1, 2, …` finds the next `n > n_{m-1}` in range with
/// `a_{n-m} ≥ a_n/2`. Stops at the first `m` with no such `n`, reporting
/// `sup_n A_n/a_n`, or when `m` exceeds `max_gap`.
pub fn prop2_search(a: &[f64], max_gap: usize) -> Result<Prop2Outcome> {
    check_sequence(a)?;
    let mut pairs = Vec::new();
    let mut next = 1usize;
    for m in 1..=max_gap {
        let found = (next.max(m)..a.len()).find(|&n| a[n - m] >= 0.5 * a[n]);
        match found {
            Some(n) => {
                pairs.push((n, m));
                next = n + 1;
            }
            None => {
                let mut acc = 0.0;
                let mut best = (0.0, 0usize);
                for (n, &v) in a.iter().enumerate() {
                    acc += v;
                    if acc / v > best.0 {
                        best = (acc / v, n);
                    }
                }
                return Ok(Prop2Outcome {
                    pairs,
                    certificate: Some(BoundednessCertificate { failed_gap: m, sup_ratio: best.0, argmax: best.1 }),
                });
            }
        }
    }
    Ok(Prop2Outcome { pairs, certificate: None })
}
