//! A two-term schedule: Fejér-reproducing polynomials at scale `b` plus
//! scaled block witnesses, with own and cross contributions reported.

use dyadic_walsh::witness::F0Term;
use dyadic_walsh::{f0_demo, lemma2_poly, DyadicSet, F0Schedule, SummabilityMatrix};

fn main() -> dyadic_walsh::Result<()> {
    let t = SummabilityMatrix::fejer();

    let set = DyadicSet::new(vec![(3, 5)])?;
    let p = lemma2_poly(&t, 8, &set, 4.0, 12)?;
    println!("single polynomial at b = 8: {:?}", p.summary());

    let schedule = F0Schedule {
        resolution: 20,
        terms: vec![
            F0Term { a: 10, eta: 1, b: 4, gamma: None, alpha: None, set: None },
            F0Term { a: 20, eta: 2, b: 12, gamma: Some(16.0), alpha: None, set: Some(vec![(3, 5)]) },
        ],
        samples: 16,
        seed: 1,
    };
    let r = f0_demo(&t, &schedule)?;
    println!("|f0|_1 = {:.4}  (sum of term norms {:.4})", r.f0_l1, r.norm_sum);
    for tr in &r.terms {
        println!(
            "a = {:>2}  alpha = {:>5.1}  min on set {:>8.4} (cross {:.2e})  witness min {:.4} vs gamma^(1/4) {:.3}",
            tr.a,
            tr.alpha,
            tr.at_scale_b.min_on_set,
            tr.at_scale_b.cross_max,
            tr.at_witness.min_total,
            tr.at_witness.predicted_scale
        );
    }
    Ok(())
}
