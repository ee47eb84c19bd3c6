//! Dirichlet and Fejér kernels: the `2^k` identity and Lebesgue constants.

use dyadic_walsh::{dirichlet, fejer, SummabilityMatrix};

fn main() -> dyadic_walsh::Result<()> {
    let res = 10;
    for k in 0..=6u32 {
        let d = dirichlet(1 << k, res)?;
        let support = 1usize << (res - k);
        let ok = (0..d.len()).all(|i| d.get(i) == if i < support { (1u64 << k) as f64 } else { 0.0 });
        println!("D_{:<3} = 2^k on [0, 2^-k)  {}", 1 << k, if ok { "yes" } else { "NO" });
    }

    println!("\n   n   |D_n|_1   |K_n|_1");
    for n in [3u64, 10, 37, 100, 513] {
        println!("{n:>4} {:>9.4} {:>9.4}", dirichlet(n, res)?.l1(), fejer(n, res)?.l1());
    }

    let t = SummabilityMatrix::fejer();
    println!("\nFejér Lebesgue constant at n = 513: {:.4}", t.lebesgue_constant(513, res)?);
    Ok(())
}
