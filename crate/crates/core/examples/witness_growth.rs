//! Block witnesses for unit weights: how `min_{E_a} |M|` and the weak ratio
//! scale with the block length.

use std::time::Instant;

use dyadic_walsh::weights::WeightFamily;
use dyadic_walsh::witness::{witness_eval, BlockParams};

fn main() -> dyadic_walsh::Result<()> {
    let max_eta: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    println!("eta     a   l1      |E_a|  min|M|   median|M|  weak_ratio  0.15*sqrt(eta)  closed-form err  secs");
    for eta in (2..=max_eta).step_by(2) {
        let t = Instant::now();
        let p = BlockParams::with_eta(8 * eta, eta)?;
        let r = witness_eval(&p, &WeightFamily::Ones)?;
        println!(
            "{eta:>3} {:>5} {:>7.4} {:>6} {:>8.4} {:>10.4} {:>11.4} {:>15.4} {:>16.3e} {:>5.1}",
            r.a,
            r.l1_norm,
            r.e_a_measure,
            r.min_on_ea,
            r.median_on_ea,
            r.weak_ratio,
            0.15 * (eta as f64).sqrt(),
            r.closed_form_max_error,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
