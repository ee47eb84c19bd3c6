use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyadic_walsh::experiment::{
    run, run_file, DecomposeCheck, DivergenceSearchSpec, Experiment, ExperimentDescriptor, FamilySpec,
    KernelDump, KernelName, NList, Prop2Spec, RandomN, RatioScanSpec, WitnessSweep,
};
use dyadic_walsh::martingale::doob_max;
use dyadic_walsh::random::random_nonneg_grid;
use dyadic_walsh::weights::{ConeSpec, OrderSampler, WeightFamily};
use dyadic_walsh::{set_resolution_cap, DyadicGrid};

#[derive(Parser)]
#[command(name = "dyadic", version, about = "Dyadic martingale and Walsh summability experiments")]
struct Cli {
    /// Grid resolution N (2^N samples).
    #[arg(long, global = true, default_value_t = 10)]
    resolution: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Resolution cap; overrides DYADIC_RESOLUTION_CAP.
    #[arg(long, global = true)]
    cap: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment descriptor.
    Run { descriptor: PathBuf },
    /// Dump a kernel grid as CSV.
    Kernel {
        #[arg(long, value_enum)]
        kind: KernelArg,
        #[arg(long)]
        param: u64,
        /// Matrix family, for `--kind mean`.
        #[arg(long)]
        family: Option<String>,
    },
    /// Check V = V1 + V2 + V3 on random n.
    DecomposeCheck {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Scan Ω_k(n)/Ω_{k-1}(n) over a cone.
    RatioScan {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        candidate: Option<f64>,
    },
    /// Search for a sequence of divergence.
    DivergenceSearch {
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Evaluate block witnesses.
    Witness {
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10")]
        eta: Vec<u32>,
        #[arg(long, default_value = "ones")]
        weights: String,
    },
    /// Nörlund subsequence search on a_k = Q_{2^k}.
    Prop2 {
        /// ones, harmonic or geometric:<r>.
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 62)]
        kmax: u32,
        #[arg(long, default_value_t = 20)]
        max_gap: usize,
    },
    /// Norms and the Doob maximal weak ratio of a grid.
    Weaknorm {
        /// Grid CSV; a seeded nonnegative random grid when omitted.
        grid: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KernelArg {
    Dirichlet,
    FejerSum,
    Fejer,
    Walsh,
    Rademacher,
    Mean,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    weights: String,
    /// kappa:<k>, omega:sqrt or omega:half_log:<L>.
    #[arg(long)]
    cone: String,
    #[arg(long, default_value_t = 8)]
    lo: u32,
    #[arg(long, default_value_t = 40)]
    hi: u32,
    /// Random indices per order besides the corners.
    #[arg(long, default_value_t = 8)]
    random: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(cap) = cli.cap {
        if let Err(e) = set_resolution_cap(cap) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    ExitCode::from(code as u8)
}

fn single(cli: &Cli, e: Experiment) -> dyadic_walsh::Result<i32> {
    let d = ExperimentDescriptor { experiments: vec![e] };
    d.validate()?;
    let out = run(&d, &cli.out_dir)?;
    for item in &out.items {
        println!("{}", item.summary);
        if let Some(f) = &item.check_failure {
            println!("CHECK FAILED: {f}");
        }
        for a in &item.artifacts {
            println!("wrote {}", a.display());
        }
    }
    Ok(out.exit_code())
}

fn sampler(cli: &Cli, s: &ScanArgs) -> dyadic_walsh::Result<(WeightFamily, ConeSpec, OrderSampler)> {
    Ok((s.weights.parse()?, s.cone.parse()?, OrderSampler { random: s.random, seed: cli.seed }))
}

fn dispatch(cli: &Cli) -> dyadic_walsh::Result<i32> {
    match &cli.command {
        Command::Run { descriptor } => Ok(run_file(descriptor, &cli.out_dir)),
        Command::Kernel { kind, param, family } => {
            let kernel = match kind {
                KernelArg::Dirichlet => KernelName::Dirichlet,
                KernelArg::FejerSum => KernelName::FejerSum,
                KernelArg::Fejer => KernelName::Fejer,
                KernelArg::Walsh => KernelName::Walsh,
                KernelArg::Rademacher => KernelName::Rademacher,
                KernelArg::Mean => KernelName::Mean,
            };
            single(
                cli,
                Experiment::KernelDump(KernelDump {
                    name: Some("kernel".into()),
                    kernel,
                    param: *param,
                    family: family.clone().map(FamilySpec::Tag),
                    resolution: cli.resolution,
                }),
            )
        }
        Command::DecomposeCheck { family, count, tolerance } => single(
            cli,
            Experiment::DecomposeCheck(DecomposeCheck {
                name: Some("decompose_check".into()),
                family: FamilySpec::Tag(family.clone()),
                resolution: cli.resolution,
                n: NList::Random(RandomN { count: *count, below: None }),
                seed: cli.seed,
                tolerance: *tolerance,
            }),
        ),
        Command::RatioScan { scan, candidate } => {
            let (weights, cone, sampler) = sampler(cli, scan)?;
            single(
                cli,
                Experiment::RatioScan(RatioScanSpec {
                    name: Some("ratio_scan".into()),
                    weights,
                    cone,
                    orders: [scan.lo, scan.hi],
                    sampler,
                    candidate: *candidate,
                    max_deviation: None,
                }),
            )
        }
        Command::DivergenceSearch { scan } => {
            let (weights, cone, sampler) = sampler(cli, scan)?;
            single(
                cli,
                Experiment::DivergenceSearch(DivergenceSearchSpec {
                    name: Some("divergence_search".into()),
                    weights,
                    cone,
                    orders: [scan.lo, scan.hi],
                    sampler,
                    expect: None,
                }),
            )
        }
        Command::Witness { eta, weights } => single(
            cli,
            Experiment::WitnessSweep(WitnessSweep {
                name: Some("witness".into()),
                etas: eta.clone(),
                weights: weights.parse()?,
                scale_factor: 8,
                check_monotone: false,
                check_bounds: false,
            }),
        ),
        Command::Prop2 { q, kmax, max_gap } => single(
            cli,
            Experiment::Prop2(Prop2Spec {
                name: Some("prop2".into()),
                q: Some(q.parse()?),
                sequence: None,
                kmax: *kmax,
                max_gap: *max_gap,
            }),
        ),
        Command::Weaknorm { grid } => {
            let f = match grid {
                Some(p) => DyadicGrid::load_csv(p)?,
                None => {
                    dyadic_walsh::grid::check_resolution(cli.resolution)?;
                    random_nonneg_grid(cli.resolution, cli.seed)
                }
            };
            let e = doob_max(&f.abs());
            let report = serde_json::json!({
                "resolution": f.resolution(),
                "norms": f.norms(),
                "doob_weak_l1": e.weak_l1(),
                "doob_weak_ratio": e.weak_l1() / f.l1(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
    }
}
