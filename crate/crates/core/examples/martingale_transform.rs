//! Conditional expectations, the square function, Doob's maximal function
//! and weighted transforms `M_n^Ω f` on a random grid.

use dyadic_walsh::martingale::{carleson_max, cond_exp, doob_max, domination_constant, h1_norm, mtransform, IndexSet};
use dyadic_walsh::random::random_grid;
use dyadic_walsh::{WalshIndex, WeightFamily};

fn main() -> dyadic_walsh::Result<()> {
    let res = 12;
    let f = random_grid(res, 7);

    let e3 = cond_exp(&f, 3)?;
    println!("E_3 f takes {} distinct values", {
        let mut v: Vec<u64> = e3.samples().iter().map(|x| x.to_bits()).collect();
        v.sort();
        v.dedup();
        v.len()
    });
    println!("|f|_1 = {:.4}  |f|_H1 = {:.4}", f.l1(), h1_norm(&f));

    let m = doob_max(&f.abs());
    println!("Doob weak ratio {:.4} (at most 1)", m.weak_l1() / f.l1());

    let n = WalshIndex(0b1011_0110_1101);
    for omega in [WeightFamily::Ones, WeightFamily::Harmonic] {
        let t = mtransform(&f, n, &omega)?;
        let c = domination_constant(n, &omega)?;
        println!(
            "{:<9} |M_n f|_inf = {:.4}  C = {:.4}  C*|f^*|_inf = {:.4}",
            omega.id(),
            t.grid.linf(),
            c,
            c * doob_max(&f.abs()).linf()
        );
    }

    let set = IndexSet::range(1, 255)?;
    let sup = carleson_max(&f, &WeightFamily::Harmonic, &set)?;
    println!("sup over n < 256 of |M_n f|: |.|_1 = {:.4}", sup.grid.l1());
    Ok(())
}
