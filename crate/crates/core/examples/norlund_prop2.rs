//! Subsequence search on `a_k = Q_{2^k}` for Nörlund generators.

use dyadic_walsh::sequence::NorlundRule;
use dyadic_walsh::weights::{norlund_dyadic_sequence, prop2_search};

fn main() -> dyadic_walsh::Result<()> {
    for q in ["ones", "harmonic", "geometric:0.5"] {
        let rule: NorlundRule = q.parse()?;
        let a = norlund_dyadic_sequence(&rule, 62)?;
        let out = prop2_search(&a, 20)?;
        print!("{q:<14} {} pairs", out.pairs.len());
        if let Some(c) = out.certificate {
            print!(", bounded: gap {} fails, sup A_n/a_n = {:.3}", c.failed_gap, c.sup_ratio);
        }
        println!();
    }
    Ok(())
}
