use serde::{Deserialize, Serialize};

use super::{choose_n_full, e_a_member_full, lemma1_scale, lemma2_poly, witness_poly, BlockParams, DyadicSet};
use crate::error::{Error, Result};
use crate::grid::{check_resolution, DyadicGrid};
use crate::random::seeded_rng;
use crate::summability::SummabilityMatrix;
use crate::transform::{fwht, SpectrumVector};
use crate::walsh::walsh_sign;
use rand::Rng;

/// Largest grid the demo will assemble.
pub const F0_MAX_RESOLUTION: u32 = 22;

/// One term `W⁰_k + W¹_k` of the demo function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F0Term {
    pub a: u32,
    pub eta: u32,
    pub b: u32,
    /// Defaults to `2η`.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Defaults to `2^{b/2}`.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Defaults to the single interval `(b, 0)`.
    #[serde(default)]
    pub set: Option<Vec<(u32, usize)>>,
}

impl F0Term {
    fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(2.0 * self.eta as f64)
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(2f64.powf(self.b as f64 / 2.0))
    }

    fn set(&self) -> Result<DyadicSet> {
        DyadicSet::new(self.set.clone().unwrap_or_else(|| vec![(self.b, 0)]))
    }
}

fn default_samples() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F0Schedule {
    pub resolution: u32,
    pub terms: Vec<F0Term>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl F0Schedule {
    /// Checks `K ≤ 4`, `b_k + 2 ≤ a_k - 2η_k` (the two polynomials of a term
    /// have disjoint spectra, and `W¹_k` is invisible to `𝒯_{2^{b_k+2}}`) and
    /// `a_k ≤ b_{k+1}`.
    pub fn validate(&self) -> Result<()> {
        if self.resolution > F0_MAX_RESOLUTION {
            return Err(Error::invalid(format!(
                "f0 demo supports N ≤ {F0_MAX_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        check_resolution(self.resolution)?;
        if self.terms.is_empty() || self.terms.len() > 4 {
            return Err(Error::invalid(format!("f0 demo takes 1..=4 terms, got {}", self.terms.len())));
        }
        if self.samples == 0 {
            return Err(Error::invalid("f0 demo needs at least one sample"));
        }
        for (k, t) in self.terms.iter().enumerate() {
            BlockParams::with_eta(t.a, t.eta)?;
            if t.a > self.resolution {
                return Err(Error::invalid(format!("term {k}: a = {} exceeds N = {}", t.a, self.resolution)));
            }
            if t.b + 2 > t.a - 2 * t.eta {
                return Err(Error::invalid(format!(
                    "term {k}: need b + 2 ≤ a - 2η, got b = {}, a = {}, η = {}",
                    t.b, t.a, t.eta
                )));
            }
            if !(t.gamma() >= 1.0) {
                return Err(Error::invalid(format!("term {k}: gamma must be ≥ 1")));
            }
            if let Some(next) = self.terms.get(k + 1) {
                if t.a > next.b {
                    return Err(Error::invalid(format!("term {k}: need a_k ≤ b_(k+1), got {} > {}", t.a, next.b)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleBReport {
    /// `2^{b+2}`.
    pub n: u64,
    /// `min_A |𝒯_n f₀|`.
    pub min_on_set: f64,
    /// `α`, the value of `|𝒯_n W⁰_k|` on `A`.
    pub own: f64,
    /// `max_A |𝒯_n (f₀ - W⁰_k)|`.
    pub cross_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSampleReport {
    pub samples: usize,
    /// `min |𝒯_{n_a(x)} f₀(x)|` over the sampled `x ∈ E_a`.
    pub min_total: f64,
    /// `min |𝒯_{n_a(x)} W¹_k(x)|`.
    pub min_own: f64,
    /// `max |𝒯_{n_a(x)} (f₀ - W¹_k)(x)|`.
    pub max_cross: f64,
    /// `γ^{1/4}`.
    pub predicted_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F0TermReport {
    pub a: u32,
    pub eta: u32,
    pub b: u32,
    pub gamma: f64,
    pub alpha: f64,
    pub w0_l1: f64,
    pub w1_l1: f64,
    pub lemma2_min_tail: f64,
    pub at_scale_b: ScaleBReport,
    pub at_witness: WitnessSampleReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F0Report {
    pub resolution: u32,
    pub matrix: String,
    pub f0_l1: f64,
    /// `Σ_k (‖W⁰_k‖_1 + ‖W¹_k‖_1)`, an upper bound for `f0_l1`.
    pub norm_sum: f64,
    pub terms: Vec<F0TermReport>,
}

/// `𝒯_n f(x)` at one sample from the Walsh coefficients of `f`.
fn mean_at(spec: &SpectrumVector, tails: &crate::summability::TailSums, n: u64, i: usize) -> f64 {
    let res = spec.resolution();
    spec.coefficients()[..n as usize]
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(l, c)| tails.tail(l as u64 + 1) * c * walsh_sign(l as u64, i, res))
        .sum()
}

/// Assembles `f₀ = Σ_k (W⁰_k + W¹_k)` on one grid and measures each term's
/// contribution to `𝒯_n f₀` at its two scales: on `A_k` with
/// `n = 2^{b_k+2}`, and at sampled `x ∈ E_{a_k}` with `n = n_{a_k}(x)`.
pub fn f0_demo(t: &SummabilityMatrix, schedule: &F0Schedule) -> Result<F0Report> {
    schedule.validate()?;
    let res = schedule.resolution;
    let mut w0s = Vec::new();
    let mut w1s = Vec::new();
    let mut tails_min = Vec::new();
    for term in &schedule.terms {
        let l2 = lemma2_poly(t, term.b, &term.set()?, term.alpha(), res)?;
        tails_min.push(l2.min_tail);
        w0s.push(l2.poly);
        let p = BlockParams::with_eta(term.a, term.eta)?;
        w1s.push(lemma1_scale(&witness_poly(&p).embed(res)?, term.gamma())?);
    }
    let mut f0 = DyadicGrid::zeros(res)?;
    for (w0, w1) in w0s.iter().zip(&w1s) {
        f0 = f0.add(w0)?.add(w1)?;
    }
    let norm_sum = w0s.iter().chain(&w1s).map(|g| g.l1()).sum();
    let f0_spec = fwht(&f0);

    let mut rng = seeded_rng(schedule.seed);
    let mut terms = Vec::new();
    for (k, term) in schedule.terms.iter().enumerate() {
        let n = 1u64 << (term.b + 2);
        let total = t.mean(&f0, n)?;
        let own = t.mean(&w0s[k], n)?;
        let ind = term.set()?.indicator(res)?;
        let mut min_on_set = f64::INFINITY;
        let mut cross_max = 0.0f64;
        for i in 0..f0.len() {
            if ind.get(i) == 1.0 {
                min_on_set = min_on_set.min(total.get(i).abs());
                cross_max = cross_max.max((total.get(i) - own.get(i)).abs());
            }
        }

        let p = BlockParams::with_eta(term.a, term.eta)?;
        let w1_spec = fwht(&w1s[k]);
        let (mut min_total, mut min_own, mut max_cross) = (f64::INFINITY, f64::INFINITY, 0.0f64);
        let mut taken = 0;
        while taken < schedule.samples {
            let i = rng.gen_range(0..f0.len());
            if !e_a_member_full(&p, i, res) {
                continue;
            }
            taken += 1;
            let n = choose_n_full(&p, i, res) as u64;
            let tails = t.tail_sums(n)?;
            let tot = mean_at(&f0_spec, &tails, n, i);
            let own = mean_at(&w1_spec, &tails, n, i);
            min_total = min_total.min(tot.abs());
            min_own = min_own.min(own.abs());
            max_cross = max_cross.max((tot - own).abs());
        }

        terms.push(F0TermReport {
            a: term.a,
            eta: term.eta,
            b: term.b,
            gamma: term.gamma(),
            alpha: term.alpha(),
            w0_l1: w0s[k].l1(),
            w1_l1: w1s[k].l1(),
            lemma2_min_tail: tails_min[k],
            at_scale_b: ScaleBReport { n, min_on_set, own: term.alpha(), cross_max },
            at_witness: WitnessSampleReport {
                samples: schedule.samples,
                min_total,
                min_own,
                max_cross,
                predicted_scale: term.gamma().powf(0.25),
            },
        });
    }
    Ok(F0Report { resolution: res, matrix: t.id(), f0_l1: f0.l1(), norm_sum, terms })
}
