//! Means `σ_n^T f` for several matrix families, and the three-part kernel
//! decomposition `w_n V_n = V1 + V2 + V3`.

use dyadic_walsh::{make_matrix, DyadicGrid, MatrixFamily};

fn main() -> dyadic_walsh::Result<()> {
    let res = 12;
    let f = DyadicGrid::indicator(res, &[(2, 1), (5, 20)])?;
    let families = ["partial_sum", "fejer", "cesaro:0.5", "cesaro:inv_log2", "vp:ceil_half", "norlund_log"];

    println!("{:<16} {:>12} {:>12} {:>12}", "family", "n=100", "n=1000", "n=4000");
    for name in families {
        let t = make_matrix(name.parse::<MatrixFamily>()?)?;
        let errs: Vec<String> = [100u64, 1000, 4000]
            .iter()
            .map(|&n| t.mean(&f, n).and_then(|m| m.sub(&f)).map(|d| format!("{:>12.4e}", d.l1())))
            .collect::<Result<_, _>>()?;
        println!("{name:<16} {}", errs.join(" "));
    }

    println!("\ndecomposition error, norlund_log");
    let t = make_matrix(MatrixFamily::NorlundLog)?;
    for n in [5u64, 77, 1000, 4095] {
        println!("  n = {n:>4}  {:.2e}", t.decompose(n, res)?.max_error());
    }
    Ok(())
}
