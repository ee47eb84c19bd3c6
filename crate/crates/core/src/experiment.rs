//! Batch experiments described by JSON files, with CSV and JSON artifacts.
//!
//! A descriptor is either a single experiment object or
//! `{"experiments": [...]}`. Every experiment carries a `kind` tag; unknown
//! fields are rejected. Each item writes `<name>.csv` (long format, ready
//! for plotting) and `<name>.json` (the item, the PRNG and seed, and a
//! summary). Items run in parallel and write only their own files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_resolution, DyadicGrid};
use crate::random::{random_grid, sample_distinct, RNG_NAME};
use crate::sequence::{LambdaRule, NorlundRule};
use crate::summability::{MatrixFamily, SummabilityMatrix};
use crate::walsh::{dirichlet, fejer, fejer_sum, rademacher, walsh};
use crate::weights::{
    divergence_search, norlund_dyadic_sequence, omega_sum, omega_sum_sweep, prop2_search, variation_sum,
    ConeSpec, DivergenceOutcome, OrderSampler, WeightFamily,
};
use crate::witness::{witness_eval, BlockParams, WitnessReport};

/// A matrix family as a tag (`"cesaro:0.5"`) or in full form with inline
/// tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Tag(String),
    Full(MatrixFamily),
}

impl FamilySpec {
    pub fn matrix(&self) -> Result<SummabilityMatrix> {
        let family = match self {
            FamilySpec::Tag(s) => s.parse()?,
            FamilySpec::Full(f) => f.clone(),
        };
        SummabilityMatrix::new(family)
    }
}

/// Indices `n`: an explicit list or `count` seeded draws from `1..below`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NList {
    Explicit(Vec<u64>),
    Random(RandomN),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomN {
    pub count: usize,
    /// Defaults to the largest admissible index plus one.
    #[serde(default)]
    pub below: Option<u64>,
}

impl NList {
    /// Indices in `1..=max`.
    fn resolve(&self, max: u64, seed: u64) -> Result<Vec<u64>> {
        let ns = match self {
            NList::Explicit(v) => v.clone(),
            NList::Random(r) => {
                let below = r.below.unwrap_or(max + 1).min(max + 1);
                if below < 2 {
                    return Err(Error::Descriptor("random n range is empty".into()));
                }
                sample_distinct(1, below, r.count, seed)
            }
        };
        if ns.is_empty() {
            return Err(Error::Descriptor("empty n list".into()));
        }
        if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > max) {
            return Err(Error::Descriptor(format!("n = {bad} outside 1..={max}")));
        }
        Ok(ns)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Dirichlet,
    FejerSum,
    Fejer,
    Walsh,
    Rademacher,
    /// `V_n` of a summability matrix; needs `family`.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDump {
    #[serde(default)]
    pub name: Option<String>,
    pub kernel: KernelName,
    pub param: u64,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    pub resolution: u32,
}

fn default_resolution() -> u32 {
    10
}

fn default_decompose_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeCheck {
    #[serde(default)]
    pub name: Option<String>,
    pub family: FamilySpec,
    #[serde(default = "default_resolution")]
    pub resolution: u32,
    pub n: NList,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_decompose_tol")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioScanSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub weights: WeightFamily,
    pub cone: ConeSpec,
    pub orders: [u32; 2],
    #[serde(default)]
    pub sampler: OrderSampler,
    #[serde(default)]
    pub candidate: Option<f64>,
    /// Fails the item when the deviation at the top order exceeds this.
    #[serde(default)]
    pub max_deviation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    Sequence,
    Refusal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceSearchSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub weights: WeightFamily,
    pub cone: ConeSpec,
    pub orders: [u32; 2],
    #[serde(default)]
    pub sampler: OrderSampler,
    #[serde(default)]
    pub expect: Option<ExpectedOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSumSweepSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub weights: WeightFamily,
    pub orders: [u32; 2],
    #[serde(default)]
    pub sampler: OrderSampler,
    /// Fails the item unless `omega_sum(n) ≥ c √(|n|+1)` for every row.
    #[serde(default)]
    pub sqrt_floor: Option<f64>,
}

fn default_weights() -> WeightFamily {
    WeightFamily::Ones
}

fn default_scale_factor() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSweep {
    #[serde(default)]
    pub name: Option<String>,
    pub etas: Vec<u32>,
    #[serde(default = "default_weights")]
    pub weights: WeightFamily,
    /// `a = scale_factor·η`.
    #[serde(default = "default_scale_factor")]
    pub scale_factor: u32,
    /// Fails the item unless weak ratios increase with `η`.
    #[serde(default)]
    pub check_monotone: bool,
    /// Fails the item unless `min_{E_a}|M| ≥ √η/3`, the weak ratio is at
    /// least `0.15√η` and the closed form matches to `1e-9`.
    #[serde(default)]
    pub check_bounds: bool,
}

fn default_kmax() -> u32 {
    62
}

fn default_max_gap() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop2Spec {
    #[serde(default)]
    pub name: Option<String>,
    /// Searches `a_k = Q_{2^k}`.
    #[serde(default)]
    pub q: Option<NorlundRule>,
    /// Or an explicit nondecreasing sequence.
    #[serde(default)]
    pub sequence: Option<Vec<f64>>,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    #[serde(default = "default_max_gap")]
    pub max_gap: usize,
}

fn default_lambdas() -> Vec<LambdaRule> {
    vec![LambdaRule::CeilHalf, LambdaRule::FloorSqrt]
}

fn default_max_order() -> u32 {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpDichotomy {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<LambdaRule>,
    #[serde(default = "default_max_order")]
    pub max_order: u32,
    /// Fails the item if the first rule's index exceeds this anywhere.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Fails the item unless the last rule's index at the top order exceeds
    /// its index at half the top order by this much.
    #[serde(default)]
    pub min_growth: Option<f64>,
}

/// Test functions for convergence probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// Indicator of a union of dyadic intervals.
    Indicator { intervals: Vec<(u32, usize)> },
    Walsh { n: u64 },
    Random { seed: u64 },
    Csv { path: PathBuf },
}

impl TestFunction {
    fn grid(&self, resolution: u32) -> Result<DyadicGrid> {
        match self {
            TestFunction::Indicator { intervals } => DyadicGrid::indicator(resolution, intervals),
            TestFunction::Walsh { n } => walsh(*n, resolution),
            TestFunction::Random { seed } => Ok(random_grid(resolution, *seed)),
            TestFunction::Csv { path } => {
                let g = DyadicGrid::load_csv(path)?;
                if g.resolution() != resolution {
                    return Err(Error::ResolutionMismatch { left: g.resolution(), right: resolution });
                }
                Ok(g)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanConvergence {
    #[serde(default)]
    pub name: Option<String>,
    pub family: FamilySpec,
    pub resolution: u32,
    pub function: TestFunction,
    /// Extra indices besides the dyadic `n = 2^k`.
    #[serde(default)]
    pub n: Option<NList>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    KernelDump(KernelDump),
    DecomposeCheck(DecomposeCheck),
    RatioScan(RatioScanSpec),
    DivergenceSearch(DivergenceSearchSpec),
    OmegaSumSweep(OmegaSumSweepSpec),
    WitnessSweep(WitnessSweep),
    Prop2(Prop2Spec),
    VpDichotomy(VpDichotomy),
    MeanConvergence(MeanConvergence),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDescriptor {
    pub experiments: Vec<Experiment>,
}

impl ExperimentDescriptor {
    /// Parses and validates a descriptor.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))?;
        let d = if value.get("experiments").is_some() {
            serde_json::from_value(value)
        } else {
            serde_json::from_value(value).map(|e| ExperimentDescriptor { experiments: vec![e] })
        }
        .map_err(|e| Error::Descriptor(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(Error::Descriptor("no experiments".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            e.validate().map_err(|err| Error::Descriptor(format!("experiment {i} ({}): {err}", e.kind())))?;
            if !names.insert(e.stem(i)) {
                return Err(Error::Descriptor(format!("duplicate experiment name `{}`", e.stem(i))));
            }
        }
        Ok(())
    }
}

fn check_orders(orders: [u32; 2]) -> Result<()> {
    if orders[0] > orders[1] || orders[1] >= 127 {
        return Err(Error::Descriptor(format!("orders {:?} must satisfy lo ≤ hi < 127", orders)));
    }
    Ok(())
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::KernelDump(_) => "kernel_dump",
            Experiment::DecomposeCheck(_) => "decompose_check",
            Experiment::RatioScan(_) => "ratio_scan",
            Experiment::DivergenceSearch(_) => "divergence_search",
            Experiment::OmegaSumSweep(_) => "omega_sum_sweep",
            Experiment::WitnessSweep(_) => "witness_sweep",
            Experiment::Prop2(_) => "prop2",
            Experiment::VpDichotomy(_) => "vp_dichotomy",
            Experiment::MeanConvergence(_) => "mean_convergence",
        }
    }

    fn name(&self) -> Option<&String> {
        match self {
            Experiment::KernelDump(e) => e.name.as_ref(),
            Experiment::DecomposeCheck(e) => e.name.as_ref(),
            Experiment::RatioScan(e) => e.name.as_ref(),
            Experiment::DivergenceSearch(e) => e.name.as_ref(),
            Experiment::OmegaSumSweep(e) => e.name.as_ref(),
            Experiment::WitnessSweep(e) => e.name.as_ref(),
            Experiment::Prop2(e) => e.name.as_ref(),
            Experiment::VpDichotomy(e) => e.name.as_ref(),
            Experiment::MeanConvergence(e) => e.name.as_ref(),
        }
    }

    /// File stem for the artifacts of item `index`.
    pub fn stem(&self, index: usize) -> String {
        self.name().cloned().unwrap_or_else(|| format!("{index:02}_{}", self.kind()))
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Experiment::DecomposeCheck(e) => Some(e.seed),
            Experiment::RatioScan(e) => Some(e.sampler.seed),
            Experiment::DivergenceSearch(e) => Some(e.sampler.seed),
            Experiment::OmegaSumSweep(e) => Some(e.sampler.seed),
            Experiment::MeanConvergence(e) => Some(e.seed),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.name() {
            if n.is_empty() || n.contains(['/', '\\']) || n.starts_with('.') {
                return Err(Error::Descriptor(format!("name `{n}` is not a plain file stem")));
            }
        }
        match self {
            Experiment::KernelDump(e) => {
                check_resolution(e.resolution)?;
                if (e.kernel == KernelName::Mean) != e.family.is_some() {
                    return Err(Error::Descriptor("`family` is required for, and only for, kernel = mean".into()));
                }
                if let Some(f) = &e.family {
                    f.matrix()?;
                }
            }
            Experiment::DecomposeCheck(e) => {
                check_resolution(e.resolution)?;
                e.family.matrix()?;
                e.n.resolve((1u64 << e.resolution) - 1, e.seed)?;
            }
            Experiment::RatioScan(e) => {
                check_orders(e.orders)?;
                e.cone.validate(e.orders[0], e.orders[1])?;
            }
            Experiment::DivergenceSearch(e) => {
                check_orders(e.orders)?;
                e.cone.validate(e.orders[0], e.orders[1])?;
            }
            Experiment::OmegaSumSweep(e) => check_orders(e.orders)?,
            Experiment::WitnessSweep(e) => {
                if e.etas.is_empty() {
                    return Err(Error::Descriptor("witness sweep needs at least one eta".into()));
                }
                for &eta in &e.etas {
                    BlockParams::with_eta(e.scale_factor.saturating_mul(eta), eta)?;
                }
            }
            Experiment::Prop2(e) => {
                if e.q.is_some() == e.sequence.is_some() {
                    return Err(Error::Descriptor("give exactly one of `q` and `sequence`".into()));
                }
                if e.kmax > 62 {
                    return Err(Error::Descriptor("kmax must be at most 62".into()));
                }
            }
            Experiment::VpDichotomy(e) => {
                if e.lambdas.is_empty() || e.max_order == 0 || e.max_order > 24 {
                    return Err(Error::Descriptor("vp dichotomy needs rules and 1 ≤ max_order ≤ 24".into()));
                }
            }
            Experiment::MeanConvergence(e) => {
                check_resolution(e.resolution)?;
                e.family.matrix()?;
                if let Some(n) = &e.n {
                    n.resolve(1u64 << e.resolution, e.seed)?;
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one experiment item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub name: String,
    pub kind: String,
    pub summary: String,
    /// Set when a declared tolerance check failed.
    pub check_failure: Option<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Outcome of a whole descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub items: Vec<ItemOutcome>,
}

impl RunOutcome {
    /// 0 when every check held, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.items.iter().any(|i| i.check_failure.is_some()) {
            2
        } else {
            0
        }
    }
}

struct Artifacts {
    csv: Vec<u8>,
    summary: serde_json::Value,
    line: String,
    check_failure: Option<String>,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs every item of a validated descriptor, writing artifacts into
/// `out_dir`. Validation errors surface as `Err`; failed tolerance checks
/// are reported per item.
pub fn run(descriptor: &ExperimentDescriptor, out_dir: impl AsRef<Path>) -> Result<RunOutcome> {
    descriptor.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let items = descriptor
        .experiments
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let stem = e.stem(i);
            let a = run_item(e)?;
            let csv_path = out_dir.join(format!("{stem}.csv"));
            let json_path = out_dir.join(format!("{stem}.json"));
            fs::write(&csv_path, &a.csv)?;
            let sidecar = serde_json::json!({
                "experiment": e,
                "rng": RNG_NAME,
                "seed": e.seed(),
                "summary": a.summary,
                "check_failure": a.check_failure,
            });
            fs::write(&json_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
            Ok(ItemOutcome {
                name: stem,
                kind: e.kind().into(),
                summary: a.line,
                check_failure: a.check_failure,
                artifacts: vec![csv_path, json_path],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutcome { items })
}

/// Loads, validates and runs a descriptor file, printing one line per item.
/// Returns the process exit code: 0 on success, 1 on validation errors, 2
/// when a declared check fails.
pub fn run_file(path: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> i32 {
    let result = ExperimentDescriptor::load(path).and_then(|d| run(&d, out_dir));
    match result {
        Ok(outcome) => {
            for item in &outcome.items {
                match &item.check_failure {
                    None => println!("{} [{}] ok: {}", item.name, item.kind, item.summary),
                    Some(f) => println!("{} [{}] CHECK FAILED: {f}; {}", item.name, item.kind, item.summary),
                }
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn fail_if(cond: bool, msg: impl FnOnce() -> String) -> Option<String> {
    if cond {
        Some(msg())
    } else {
        None
    }
}

#[derive(Serialize)]
struct GridRow {
    index: usize,
    value: f64,
}

#[derive(Serialize)]
struct DecomposeRow {
    n: u64,
    relative_error: f64,
}

#[derive(Serialize)]
struct RatioCsvRow {
    order: u32,
    samples: usize,
    min: f64,
    max: f64,
    mean: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct GammaCsvRow {
    n: String,
    order: u32,
    variation_sum: f64,
    omega_sum: f64,
    gamma: u32,
    lme_value: f64,
}

#[derive(Serialize)]
struct OmegaCsvRow {
    n: String,
    order: u32,
    variation_sum: f64,
    omega_sum: f64,
    sqrt_ratio: f64,
}

#[derive(Serialize)]
struct Prop2Row {
    j: usize,
    n_j: usize,
    gamma_j: usize,
    ratio: f64,
}

#[derive(Serialize)]
struct VpRow {
    lambda: String,
    order: u32,
    max_index: f64,
    argmax: u64,
}

#[derive(Serialize)]
struct ConvergenceRow {
    sweep: &'static str,
    n: u64,
    l1_error: f64,
    max_error: f64,
}

fn run_item(e: &Experiment) -> Result<Artifacts> {
    match e {
        Experiment::KernelDump(k) => {
            let res = k.resolution;
            let grid = match k.kernel {
                KernelName::Dirichlet => dirichlet(k.param, res)?,
                KernelName::FejerSum => fejer_sum(k.param, res)?,
                KernelName::Fejer => fejer(k.param, res)?,
                KernelName::Walsh => walsh(k.param, res)?,
                KernelName::Rademacher => {
                    let r = u32::try_from(k.param).map_err(|_| Error::invalid("rademacher index too large"))?;
                    rademacher(r, res)?
                }
                KernelName::Mean => k.family.as_ref().unwrap().matrix()?.kernel(k.param, res)?,
            };
            let rows: Vec<GridRow> =
                grid.samples().iter().enumerate().map(|(index, &value)| GridRow { index, value }).collect();
            let norms = grid.norms();
            Ok(Artifacts {
                csv: to_csv(&rows)?,
                line: format!("{:?}({}) at N={res}: L1 = {}", k.kernel, k.param, norms.l1),
                summary: serde_json::to_value(norms)?,
                check_failure: None,
            })
        }
        Experiment::DecomposeCheck(d) => {
            let t = d.family.matrix()?;
            let ns = d.n.resolve((1u64 << d.resolution) - 1, d.seed)?;
            let rows = ns
                .par_iter()
                .map(|&n| Ok(DecomposeRow { n, relative_error: t.decompose(n, d.resolution)?.max_error() }))
                .collect::<Result<Vec<_>>>()?;
            let worst = rows.iter().max_by(|a, b| a.relative_error.total_cmp(&b.relative_error)).unwrap();
            let (max_err, worst_n) = (worst.relative_error, worst.n);
            Ok(Artifacts {
                csv: to_csv(&rows)?,
                line: format!("{} over {} n: max relative error {max_err:.3e}", t.id(), rows.len()),
                summary: serde_json::json!({"family": t.id(), "max_error": max_err, "worst_n": worst_n}),
                check_failure: fail_if(!(max_err <= d.tolerance), || {
                    format!("decomposition error {max_err:.3e} > {:.1e} at n = {worst_n}", d.tolerance)
                }),
            })
        }
        Experiment::RatioScan(r) => {
            let scan = crate::weights::cone_ratio_scan(
                &r.weights,
                &r.cone,
                r.orders[0]..=r.orders[1],
                &r.sampler,
                r.candidate,
            )?;
            let rows: Vec<RatioCsvRow> = scan
                .rows
                .iter()
                .map(|w| RatioCsvRow {
                    order: w.order,
                    samples: w.samples,
                    min: w.min,
                    max: w.max,
                    mean: w.mean,
                    deviation: w.deviation,
                })
                .collect();
            let top = scan.rows.last().unwrap().deviation;
            Ok(Artifacts {
                csv: to_csv(&rows)?,
                line: format!(
                    "{} in {}: candidate {}, top deviation {top:.4}, slope {:.3e}",
                    scan.weights, scan.cone, scan.candidate, scan.slope
                ),
                check_failure: r.max_deviation.and_then(|m| {
                    fail_if(!(top <= m), || format!("deviation {top:.4} > {m} at |n| = {}", r.orders[1]))
                }),
                summary: serde_json::to_value(&scan)?,
            })
        }
        Experiment::DivergenceSearch(d) => {
            let outcome = divergence_search(&d.weights, &d.cone, d.orders[0]..=d.orders[1], &d.sampler)?;
            let mut rows = Vec::new();
            let push = |rows: &mut Vec<GammaCsvRow>, n: u128, order: u32, gamma: u32, lme: f64| -> Result<()> {
                rows.push(GammaCsvRow {
                    n: n.to_string(),
                    order,
                    variation_sum: variation_sum(&d.weights, n)?,
                    omega_sum: omega_sum(&d.weights, n)?,
                    gamma,
                    lme_value: lme,
                });
                Ok(())
            };
            let line = match &outcome {
                DivergenceOutcome::Sequence(s) => {
                    for g in &s.entries {
                        push(&mut rows, g.n, g.order, g.gamma, g.lme)?;
                    }
                    format!("sequence for {} in {}: c = {}, max γ/|n| = {:.3}", s.weights, s.cone, s.c, s.max_fraction)
                }
                DivergenceOutcome::Refusal(r) => {
                    for &(n, gamma, lme) in &r.lme_values {
                        push(&mut rows, n, crate::index::order_of(n), gamma, lme)?;
                    }
                    format!("refusal for {} in {}: {} (ratio floor {:.4})", r.weights, r.cone, r.reason, r.ratio_floor)
                }
            };
            let failure = d.expect.and_then(|want| {
                let got = if outcome.is_sequence() { ExpectedOutcome::Sequence } else { ExpectedOutcome::Refusal };
                fail_if(got != want, || format!("expected {want:?}, got {got:?}"))
            });
            Ok(Artifacts {
                csv: to_csv(&rows)?,
                line,
                summary: serde_json::to_value(&outcome)?,
                check_failure: failure,
            })
        }
        Experiment::OmegaSumSweep(o) => {
            let sweep = omega_sum_sweep(&o.weights, o.orders[0]..=o.orders[1], &o.sampler)?;
            let rows: Vec<OmegaCsvRow> = sweep
                .iter()
                .map(|r| OmegaCsvRow {
                    n: r.n.to_string(),
                    order: r.order,
                    variation_sum: r.variation_sum,
                    omega_sum: r.omega_sum,
                    sqrt_ratio: r.omega_sum / ((r.order + 1) as f64).sqrt(),
                })
                .collect();
            let worst = rows.iter().min_by(|a, b| a.sqrt_ratio.total_cmp(&b.sqrt_ratio)).unwrap();
            Ok(Artifacts {
                line: format!("{}: min omega_sum/sqrt(|n|+1) = {:.4}", o.weights, worst.sqrt_ratio),
                check_failure: o.sqrt_floor.and_then(|c| {
                    fail_if(!(worst.sqrt_ratio >= c), || format!("omega_sum below {c}·sqrt(|n|+1) at n = {}", worst.n))
                }),
                summary: serde_json::json!({"weights": o.weights.id(), "min_sqrt_ratio": worst.sqrt_ratio}),
                csv: to_csv(&rows)?,
            })
        }
        Experiment::WitnessSweep(w) => {
            let reports = w
                .etas
                .iter()
                .map(|&eta| witness_eval(&BlockParams::with_eta(w.scale_factor * eta, eta)?, &w.weights))
                .collect::<Result<Vec<WitnessReport>>>()?;
            let mut failures = Vec::new();
            if w.check_monotone {
                for p in reports.windows(2) {
                    if !(p[1].weak_ratio > p[0].weak_ratio) {
                        failures.push(format!("weak ratio not increasing from eta {} to {}", p[0].eta, p[1].eta));
                    }
                }
            }
            if w.check_bounds {
                for r in &reports {
                    let s = (r.eta as f64).sqrt();
                    if !(r.min_on_ea >= s / 3.0 - 1e-9) {
                        failures.push(format!("eta {}: min |M| on E_a = {:.4} < sqrt(eta)/3", r.eta, r.min_on_ea));
                    }
                    if !(r.weak_ratio >= 0.15 * s) {
                        failures.push(format!("eta {}: weak ratio {:.4} < 0.15 sqrt(eta)", r.eta, r.weak_ratio));
                    }
                    if !(r.closed_form_max_error <= 1e-9) {
                        failures.push(format!("eta {}: closed form off by {:.3e}", r.eta, r.closed_form_max_error));
                    }
                }
            }
            let ratios: Vec<String> = reports.iter().map(|r| format!("{}:{:.4}", r.eta, r.weak_ratio)).collect();
            Ok(Artifacts {
                csv: to_csv(&reports)?,
                line: format!("weak ratios by eta {}", ratios.join(" ")),
                summary: serde_json::to_value(&reports)?,
                check_failure: if failures.is_empty() { None } else { Some(failures.join("; ")) },
            })
        }
        Experiment::Prop2(p) => {
            let a = match (&p.q, &p.sequence) {
                (Some(q), None) => norlund_dyadic_sequence(q, p.kmax)?,
                (None, Some(s)) => s.clone(),
                _ => unreachable!(),
            };
            let out = prop2_search(&a, p.max_gap)?;
            let rows: Vec<Prop2Row> = out
                .pairs
                .iter()
                .enumerate()
                .map(|(j, &(n, g))| Prop2Row { j: j + 1, n_j: n, gamma_j: g, ratio: a[n - g] / a[n] })
                .collect();
            let line = match &out.certificate {
                None => format!("{} pairs found", out.pairs.len()),
                Some(c) => format!(
                    "{} pairs, no index for gap {}; sup A_n/a_n = {:.4} at n = {}",
                    out.pairs.len(),
                    c.failed_gap,
                    c.sup_ratio,
                    c.argmax
                ),
            };
            Ok(Artifacts { csv: to_csv(&rows)?, line, summary: serde_json::to_value(&out)?, check_failure: None })
        }
        Experiment::VpDichotomy(v) => {
            let mut rows = Vec::new();
            for rule in &v.lambdas {
                let t = SummabilityMatrix::new(MatrixFamily::ValleePoussin { lambda: rule.clone() })?;
                for m in 0..=v.max_order {
                    let per = ((1u64 << m)..(2u64 << m))
                        .into_par_iter()
                        .map(|n| Ok((t.boundedness_index(n)?, n)))
                        .collect::<Result<Vec<_>>>()?;
                    let (max_index, argmax) =
                        per.into_iter().fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
                    rows.push(VpRow { lambda: rule.tag(), order: m, max_index, argmax });
                }
            }
            let per_rule = v.max_order as usize + 1;
            let first_sup = rows[..per_rule].iter().map(|r| r.max_index).fold(0.0, f64::max);
            let last = &rows[rows.len() - per_rule..];
            let growth = last[v.max_order as usize].max_index - last[v.max_order as usize / 2].max_index;
            let mut failures = Vec::new();
            if let Some(b) = v.bound {
                if !(first_sup <= b) {
                    failures.push(format!("{} index {first_sup:.4} > {b}", rows[0].lambda));
                }
            }
            if let Some(g) = v.min_growth {
                if !(growth >= g) {
                    failures.push(format!("{} index grew by {growth:.4} < {g}", last[0].lambda));
                }
            }
            Ok(Artifacts {
                csv: to_csv(&rows)?,
                line: format!(
                    "{}: sup index {first_sup:.4}; {}: growth {growth:.4} from |n|={} to {}",
                    rows[0].lambda,
                    last[0].lambda,
                    v.max_order / 2,
                    v.max_order
                ),
                summary: serde_json::json!({"first_sup": first_sup, "last_growth": growth}),
                check_failure: if failures.is_empty() { None } else { Some(failures.join("; ")) },
            })
        }
        Experiment::MeanConvergence(m) => {
            let rows = mean_convergence(m)?;
            let last_dyadic = rows.iter().filter(|r| r.sweep == "dyadic").last().unwrap();
            Ok(Artifacts {
                line: format!(
                    "{} on N={}: L1 error {:.3e} at n = 2^{}",
                    m.family.matrix()?.id(),
                    m.resolution,
                    last_dyadic.l1_error,
                    m.resolution
                ),
                summary: serde_json::json!({"family": m.family.matrix()?.id(), "final_l1_error": last_dyadic.l1_error}),
                csv: to_csv(&rows)?,
                check_failure: None,
            })
        }
    }
}

fn mean_convergence(m: &MeanConvergence) -> Result<Vec<ConvergenceRow>> {
    let t = m.family.matrix()?;
    let f = m.function.grid(m.resolution)?;
    let mut plan: Vec<(&'static str, u64)> = (0..=m.resolution).map(|k| ("dyadic", 1u64 << k)).collect();
    if let Some(ns) = &m.n {
        plan.extend(ns.resolve(1u64 << m.resolution, m.seed)?.into_iter().map(|n| ("arbitrary", n)));
    }
    plan.par_iter()
        .map(|&(sweep, n)| {
            let err = t.mean(&f, n)?.sub(&f)?;
            Ok(ConvergenceRow { sweep, n, l1_error: err.l1(), max_error: err.linf() })
        })
        .collect()
}

/// Per-`n` errors `‖𝒯_n f - f‖_1` and `‖𝒯_n f - f‖_∞` along `n = 2^k` and
/// any extra indices, as `(sweep, n, l1, max)`.
pub fn mean_convergence_table(m: &MeanConvergence) -> Result<Vec<(String, u64, f64, f64)>> {
    Ok(mean_convergence(m)?.into_iter().map(|r| (r.sweep.to_string(), r.n, r.l1_error, r.max_error)).collect())
}
