use serde::{Deserialize, Serialize};

use super::{ConeSpec, OrderSampler, WeightFamily};
use crate::error::{Error, Result};
use crate::index::{order_of, WalshIndex};

/// `Σ_{k=0}^{|n|} |ε_{k-1}(n) - ε_k(n)| Ω_k(n)` with `ε_{-1}(n) = 0`.
pub fn variation_sum(omega: &WeightFamily, n: u128) -> Result<f64> {
    let idx = WalshIndex(n);
    let top = idx.order()?;
    let mut s = 0.0;
    let mut prev = 0u8;
    for k in 0..=top {
        let d = idx.digit(k);
        if d != prev {
            s += omega.omega(k, n)?;
        }
        prev = d;
    }
    Ok(s)
}

/// `(min, max)` of `Ω_{|n|}(n)` over the given indices.
pub fn top_scale_stats(omega: &WeightFamily, ns: impl IntoIterator<Item = u128>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in ns {
        let v = omega.omega(order_of(n), n)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return Err(Error::invalid("top_scale_stats needs at least one index"));
    }
    Ok((lo, hi))
}

/// `Σ_{k=0}^{|n|} Ω_k(n)`.
pub fn omega_sum(omega: &WeightFamily, n: u128) -> Result<f64> {
    Ok(omega.profile(n)?.iter().sum())
}

/// Ratios `Ω_k(n)/Ω_{k-1}(n)` over the cone rows of one `n`.
fn cone_ratios(omega: &WeightFamily, cone: &ConeSpec, n: u128) -> Result<Vec<(u32, f64)>> {
    let m = order_of(n);
    let lo = cone.lowest(m)?.max(1);
    let mut out = Vec::new();
    let mut prev = if lo <= m { omega.omega(lo - 1, n)? } else { 0.0 };
    for k in lo..=m {
        let cur = omega.omega(k, n)?;
        let r = if prev == 0.0 { f64::INFINITY } else { cur / prev };
        out.push((k, r));
        prev = cur;
    }
    Ok(out)
}

/// Ratio statistics for one order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub order: u32,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `max |ratio - L|`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioScan {
    pub weights: String,
    pub cone: String,
    pub candidate: f64,
    pub rows: Vec<RatioRow>,
    /// Least-squares slope of deviation against order.
    pub slope: f64,
    /// Deviation at the top order is below the bottom one and the slope is
    /// negative, or the deviation is identically zero.
    pub shrinking: bool,
}

impl RatioScan {
    pub fn row(&self, order: u32) -> Option<&RatioRow> {
        self.rows.iter().find(|r| r.order == order)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Per-order statistics of `Ω_k(n)/Ω_{k-1}(n)` over cone rows, with a trend
/// estimate for the deviation from `candidate` (estimated as the mean at
/// the top order when `None`). Only a finite-range trend is reported.
pub fn cone_ratio_scan(
    omega: &WeightFamily,
    cone: &ConeSpec,
    orders: std::ops::RangeInclusive<u32>,
    sampler: &OrderSampler,
    candidate: Option<f64>,
) -> Result<RatioScan> {
    let mut raw: Vec<(u32, Vec<f64>)> = Vec::new();
    for m in orders.clone() {
        let mut vals = Vec::new();
        for n in sampler.samples(m) {
            vals.extend(cone_ratios(omega, cone, n)?.into_iter().map(|p| p.1));
        }
        if vals.is_empty() {
            return Err(Error::invalid(format!("cone {} is empty at |n| = {m}", cone.id())));
        }
        raw.push((m, vals));
    }
    let candidate = candidate.unwrap_or_else(|| {
        let top = &raw.last().unwrap().1;
        top.iter().sum::<f64>() / top.len() as f64
    });
    let rows: Vec<RatioRow> = raw
        .iter()
        .map(|(m, v)| RatioRow {
            order: *m,
            samples: v.len(),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            deviation: v.iter().map(|r| (r - candidate).abs()).fold(0.0, f64::max),
        })
        .collect();
    let finite: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation.is_finite())
        .map(|r| (r.order as f64, r.deviation))
        .collect();
    let slope = ls_slope(&finite);
    let (first, last) = (rows.first().unwrap().deviation, rows.last().unwrap().deviation);
    let shrinking = (first == 0.0 && last == 0.0 && slope == 0.0) || (slope < 0.0 && last < first);
    Ok(RatioScan { weights: omega.id(), cone: cone.id(), candidate, rows, slope, shrinking })
}

/// One evaluated index of a divergence search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub n: u128,
    pub order: u32,
    pub width: u32,
    pub gamma: u32,
    /// `Ω_{|n|-γ(n)}(n)`.
    pub lme: f64,
    /// `Ω_{|n|}(n)`.
    pub top: f64,
    /// `1 + max θ_k` over the window that would have allowed `γ+1`, if `γ`
    /// stopped below the cone width.
    pub blocking_ratio: Option<f64>,
}

/// A sequence of divergence over the scanned range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSequence {
    pub weights: String,
    pub cone: String,
    pub entries: Vec<GammaEntry>,
    /// Empirical `c = min Ω_{|n|-γ(n)}(n)`.
    pub c: f64,
    /// `(N, inf{γ(n) : |n| ≥ N})` over the scanned orders.
    pub inf_gamma_by_order: Vec<(u32, u32)>,
    /// `max γ(n)/|n|`.
    pub max_fraction: f64,
    /// Indices violating `Ω_{|n|-γ}(n) ≥ e^{-1} Ω_{|n|}(n)`.
    pub e_bound_violations: usize,
}

impl DivergenceSequence {
    pub fn gamma(&self, n: u128) -> Option<u32> {
        self.entries.iter().find(|e| e.n == n).map(|e| e.gamma)
    }
}

/// Why no sequence of divergence was found over the range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefusalCertificate {
    pub weights: String,
    pub cone: String,
    pub reason: String,
    pub max_gamma: u32,
    pub inf_gamma_by_order: Vec<(u32, u32)>,
    /// `min Ω_k(n)/Ω_{k-1}(n)` over every scanned cone row.
    pub ratio_floor: f64,
    /// `(|n|, smallest blocking ratio at that order)`.
    pub blocking_ratios: Vec<(u32, f64)>,
    /// `(γ, Ω_{|n|-γ}(n))` per scanned index.
    pub lme_values: Vec<(u128, u32, f64)>,
    pub c: f64,
    /// `max Ω_{|n|}(n)`.
    pub top_max: f64,
    /// `log_β(C/c)` when the ratio floor `β` exceeds 1.
    pub gamma_bound: Option<f64>,
    pub gamma_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DivergenceOutcome {
    Sequence(DivergenceSequence),
    Refusal(RefusalCertificate),
}

impl DivergenceOutcome {
    pub fn is_sequence(&self) -> bool {
        matches!(self, DivergenceOutcome::Sequence(_))
    }
}

fn gamma_for(omega: &WeightFamily, cone: &ConeSpec, n: u128, floor: &mut f64) -> Result<GammaEntry> {
    let m = order_of(n);
    let h = cone.width(m)?.min(m);
    let profile = omega.profile(n)?;
    let theta = |k: u32| {
        let prev = profile[k as usize - 1];
        if prev == 0.0 {
            f64::INFINITY
        } else {
            profile[k as usize] / prev - 1.0
        }
    };
    for (_, r) in cone_ratios(omega, cone, n)? {
        *floor = floor.min(r);
    }
    // Largest j ≤ h with max_{m-j+1 ≤ k ≤ m} θ_k ≤ 1/j; windows are nested,
    // so the running maximum is reused.
    let mut gamma = 0u32;
    let mut running = f64::NEG_INFINITY;
    let mut window_max = Vec::with_capacity(h as usize + 1);
    window_max.push(f64::NEG_INFINITY);
    for j in 1..=h {
        running = running.max(theta(m - j + 1));
        window_max.push(running);
        if running <= 1.0 / j as f64 {
            gamma = j;
        }
    }
    let gamma = gamma.max(1);
    let blocking_ratio = if gamma < h { Some(1.0 + window_max[gamma as usize + 1]) } else { None };
    Ok(GammaEntry {
        n,
        order: m,
        width: h,
        gamma,
        lme: profile[(m - gamma) as usize],
        top: profile[m as usize],
        blocking_ratio,
    })
}

/// Builds `γ(n)` on the scanned orders: `θ_k(n) = Ω_k(n)/Ω_{k-1}(n) - 1`,
/// `γ(n)` the largest `1 ≤ j ≤ h_Δ(n)` with `max_{|n|-j<k≤|n|} θ_k(n) ≤ 1/j`,
/// falling back to 1.
///
/// A sequence is returned when, over the range, `γ` grows (the infimum at
/// the top order exceeds the infimum over all orders), `max γ/|n| < 1` and
/// `c > 0`. Otherwise a refusal certificate records what blocked it.
pub fn divergence_search(
    omega: &WeightFamily,
    cone: &ConeSpec,
    orders: std::ops::RangeInclusive<u32>,
    sampler: &OrderSampler,
) -> Result<DivergenceOutcome> {
    let (lo, hi) = (*orders.start(), *orders.end());
    cone.validate(lo, hi)?;
    let mut floor = f64::INFINITY;
    let mut entries = Vec::new();
    for m in orders {
        for n in sampler.samples(m) {
            entries.push(gamma_for(omega, cone, n, &mut floor)?);
        }
    }
    if entries.is_empty() {
        return Err(Error::invalid("divergence search over an empty range"));
    }
    let c = entries.iter().map(|e| e.lme).fold(f64::INFINITY, f64::min);
    let top_max = entries.iter().map(|e| e.top).fold(f64::NEG_INFINITY, f64::max);
    let inf_gamma_by_order: Vec<(u32, u32)> = (lo..=hi)
        .map(|m| (m, entries.iter().filter(|e| e.order >= m).map(|e| e.gamma).min().unwrap()))
        .collect();
    let max_fraction =
        entries.iter().map(|e| e.gamma as f64 / e.order.max(1) as f64).fold(0.0, f64::max);
    let e_bound_violations = entries.iter().filter(|e| e.lme < e.top / std::f64::consts::E).count();
    let grows = inf_gamma_by_order.last().unwrap().1 > inf_gamma_by_order[0].1;

    if grows && c > 0.0 && max_fraction < 1.0 {
        return Ok(DivergenceOutcome::Sequence(DivergenceSequence {
            weights: omega.id(),
            cone: cone.id(),
            entries,
            c,
            inf_gamma_by_order,
            max_fraction,
            e_bound_violations,
        }));
    }

    let reason = if !grows {
        "gamma(n) stays bounded over the range"
    } else if c <= 0.0 {
        "Omega_{|n|-gamma}(n) reaches 0"
    } else {
        "gamma(n)/|n| reaches 1"
    };
    let mut blocking_ratios: Vec<(u32, f64)> = Vec::new();
    for e in &entries {
        if let Some(r) = e.blocking_ratio {
            match blocking_ratios.last_mut() {
                Some(last) if last.0 == e.order => last.1 = last.1.min(r),
                _ => blocking_ratios.push((e.order, r)),
            }
        }
    }
    let max_gamma = entries.iter().map(|e| e.gamma).max().unwrap();
    let gamma_bound = if floor > 1.0 && c > 0.0 && floor.is_finite() {
        Some((top_max / c).ln() / floor.ln())
    } else {
        None
    };
    let gamma_bound_holds = gamma_bound.is_none_or(|b| max_gamma as f64 <= b + 1e-9);
    Ok(DivergenceOutcome::Refusal(RefusalCertificate {
        weights: omega.id(),
        cone: cone.id(),
        reason: reason.into(),
        max_gamma,
        inf_gamma_by_order,
        ratio_floor: floor,
        blocking_ratios,
        lme_values: entries.iter().map(|e| (e.n, e.gamma, e.lme)).collect(),
        c,
        top_max,
        gamma_bound,
        gamma_bound_holds,
    }))
}

/// One row of an `Ω`-sum sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSumRow {
    pub n: u128,
    pub order: u32,
    pub variation_sum: f64,
    pub omega_sum: f64,
}

pub fn omega_sum_sweep(
    omega: &WeightFamily,
    orders: std::ops::RangeInclusive<u32>,
    sampler: &OrderSampler,
) -> Result<Vec<OmegaSumRow>> {
    let mut out = Vec::new();
    for m in orders {
        for n in sampler.samples(m) {
            out.push(OmegaSumRow {
                n,
                order: m,
                variation_sum: variation_sum(omega, n)?,
                omega_sum: omega_sum(omega, n)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::harmonic;
    use crate::summability::SummabilityMatrix;
    use crate::weights::{t3_family, OmegaRule};

    #[test]
    fn variation_examples() {
        for m in 0..40 {
            assert_eq!(variation_sum(&WeightFamily::Ones, 1u128 << m).unwrap(), 1.0);
        }
        assert_eq!(variation_sum(&WeightFamily::Ones, 21).unwrap(), 5.0);
        let ns = (1..5000u128).collect::<Vec<_>>();
        assert_eq!(top_scale_stats(&WeightFamily::Harmonic, ns).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn omega_sum_examples() {
        for n in [1u128, 5, 1000, 1 << 50] {
            let m = order_of(n);
            assert_eq!(omega_sum(&WeightFamily::Ones, n).unwrap(), m as f64 + 1.0);
            let h = omega_sum(&WeightFamily::Harmonic, n).unwrap();
            assert!((h - harmonic(m as u64 + 1)).abs() < 1e-14);
        }
        let t3 = t3_family(2.0).unwrap();
        let s = omega_sum(&t3, 1u128 << 63).unwrap();
        assert!((s - 9.375).abs() < 1e-12);
        assert!(s >= 0.5 * 64f64.sqrt());
    }

    #[test]
    fn fejer_ratios_exactly_two() {
        let w = WeightFamily::Matrix(SummabilityMatrix::fejer());
        let scan = cone_ratio_scan(&w, &ConeSpec::kappa(0.5), 4..=20, &OrderSampler::default(), Some(2.0)).unwrap();
        for r in &scan.rows {
            assert_eq!((r.min, r.max, r.deviation), (2.0, 2.0, 0.0));
        }
    }

    #[test]
    fn harmonic_ratio_profile() {
        let n = 1u128 << 30;
        let p = WeightFamily::Harmonic.profile(n).unwrap();
        assert_eq!(p[30] / p[29], 2.0);
        assert!((p[5] / p[4] - 1.0).abs() < 0.04);
    }

    #[test]
    fn ones_gives_full_width() {
        let cone = ConeSpec::kappa(0.5);
        let out = divergence_search(&WeightFamily::Ones, &cone, 4..=40, &OrderSampler::default()).unwrap();
        let DivergenceOutcome::Sequence(seq) = out else { panic!("expected a sequence") };
        assert_eq!(seq.c, 1.0);
        for e in &seq.entries {
            assert_eq!(e.gamma, cone.width(e.order).unwrap());
        }
        assert_eq!(seq.e_bound_violations, 0);
    }

    #[test]
    fn harmonic_refuses() {
        let out = divergence_search(&WeightFamily::Harmonic, &ConeSpec::kappa(0.5), 4..=40, &OrderSampler::default()).unwrap();
        let DivergenceOutcome::Refusal(r) = out else { panic!("expected a refusal") };
        for (_, g, lme) in &r.lme_values {
            assert_eq!(*lme, 1.0 / (*g as f64 + 1.0));
        }
        assert!(r.gamma_bound_holds);
    }

    #[test]
    fn fejer_refuses_with_floor_two() {
        let w = WeightFamily::Matrix(SummabilityMatrix::fejer());
        let out = divergence_search(&w, &ConeSpec::kappa(0.5), 4..=40, &OrderSampler::default()).unwrap();
        let DivergenceOutcome::Refusal(r) = out else { panic!("expected a refusal") };
        assert_eq!(r.ratio_floor, 2.0);
        assert_eq!(r.max_gamma, 1);
        assert!(r.gamma_bound.unwrap() >= 1.0 && r.gamma_bound_holds);
    }

    #[test]
    fn norlund_log_sequence_and_shrinking_ratios() {
        let w = WeightFamily::Matrix("norlund_log".parse().unwrap());
        let cone = ConeSpec::omega(OmegaRule::Sqrt);
        let out = divergence_search(&w, &cone, 9..=40, &OrderSampler::default()).unwrap();
        let DivergenceOutcome::Sequence(seq) = out else { panic!("expected a sequence: {out:?}") };
        assert!(seq.c > 0.0 && seq.max_fraction < 1.0);
        let scan = cone_ratio_scan(&w, &cone, 9..=40, &OrderSampler::default(), Some(1.0)).unwrap();
        assert!(scan.shrinking);
    }
}
