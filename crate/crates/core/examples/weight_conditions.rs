//! Ratio scans over cones and the search for a sequence of divergence.

use dyadic_walsh::weights::{cone_ratio_scan, divergence_search, omega_sum};
use dyadic_walsh::weights::DivergenceOutcome;
use dyadic_walsh::{ConeSpec, OmegaRule, OrderSampler, WeightFamily};

fn main() -> dyadic_walsh::Result<()> {
    let sampler = OrderSampler { random: 6, seed: 5 };
    let harmonic = WeightFamily::Harmonic;
    let scan = cone_ratio_scan(&harmonic, &ConeSpec::kappa(0.5), 8..=32, &sampler, Some(1.0))?;
    println!("harmonic / kappa=1/2: slope {:.3e}, shrinking {}", scan.slope, scan.shrinking);
    for r in scan.rows.iter().step_by(6) {
        println!("  |n| = {:>2}  ratio in [{:.4}, {:.4}]", r.order, r.min, r.max);
    }

    for (omega, cone) in [
        (WeightFamily::Ones, ConeSpec::omega(OmegaRule::Sqrt)),
        (WeightFamily::Harmonic, ConeSpec::kappa(0.5)),
    ] {
        match divergence_search(&omega, &cone, 9..=30, &sampler)? {
            DivergenceOutcome::Sequence(s) => println!(
                "{} on {}: sequence, c = {:.3}, inf gamma at top = {:?}",
                s.weights,
                s.cone,
                s.c,
                s.inf_gamma_by_order.last()
            ),
            DivergenceOutcome::Refusal(r) => {
                println!("{} on {}: refused ({}), max gamma {}", r.weights, r.cone, r.reason, r.max_gamma)
            }
        }
    }

    let t3 = WeightFamily::t3(2.0);
    for m in [16u32, 24, 32, 40] {
        let n = (1u128 << m) | 1;
        println!("T3 sum at |n| = {m}: {:.4}  sqrt|n| = {:.4}", omega_sum(&t3, n)?, (m as f64).sqrt());
    }
    Ok(())
}
