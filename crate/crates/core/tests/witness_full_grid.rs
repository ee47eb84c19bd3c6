//! The windowed witness evaluation against transforms on full `2^a` grids.

use std::collections::BTreeMap;

use dyadic_walsh::index::WalshIndex;
use dyadic_walsh::martingale::mtransform;
use dyadic_walsh::summability::SummabilityMatrix;
use dyadic_walsh::weights::WeightFamily;
use dyadic_walsh::witness::{
    choose_n_full, e_a_member_full, f0_demo, lemma2_poly, witness_eval, witness_poly, BlockParams, DyadicSet,
    F0Schedule, F0Term,
};

fn full_grid_values(p: &BlockParams, omega: &WeightFamily, res: u32) -> Vec<f64> {
    let w = witness_poly(p).embed(res).unwrap();
    let mut by_n: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
    for i in 0..w.len() {
        if e_a_member_full(p, i, res) {
            by_n.entry(choose_n_full(p, i, res)).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    for (n, idx) in by_n {
        let m = mtransform(&w, WalshIndex(n), omega).unwrap();
        out.extend(idx.into_iter().map(|i| m.grid.get(i)));
    }
    out
}

#[test]
fn window_matches_full_grid() {
    for (a, eta, res) in [(16u32, 2u32, 16u32), (20, 4, 20), (12, 3, 14), (9, 4, 10)] {
        let p = BlockParams::with_eta(a, eta).unwrap();
        for omega in [WeightFamily::Ones, WeightFamily::Harmonic] {
            let vals = full_grid_values(&p, &omega, res);
            let full_len = 1usize << res;
            let measure = vals.len() as f64 / full_len as f64;
            let mut abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let r = witness_eval(&p, &omega).unwrap();
            assert_eq!(measure, r.e_a_measure);
            assert!((abs[0] - r.min_on_ea).abs() < 1e-9, "a={a} eta={eta} {}", omega.id());
            let above = abs.iter().filter(|&&v| v >= r.lambda * (1.0 - 1e-12)).count();
            let weak = r.lambda * above as f64 / full_len as f64 / r.l1_norm;
            assert!((weak - r.weak_ratio).abs() < 1e-9, "a={a} eta={eta} {}", omega.id());
            let emb = witness_poly(&p).embed(res).unwrap();
            assert!((emb.l1() - r.l1_norm).abs() < 1e-12);
        }
    }
}

#[test]
fn witness_is_fixed_by_its_walsh_factor() {
    let p = BlockParams::with_eta(14, 3).unwrap();
    let w = witness_poly(&p).embed(14).unwrap();
    for i in 0..w.len() {
        let n = choose_n_full(&p, i, 14) as u64;
        let prod = w.get(i) * dyadic_walsh::walsh::walsh_sign(n, i, 14);
        assert_eq!(prod, w.get(i));
    }
}

#[test]
fn single_term_f0_reduces_to_its_parts() {
    let t = SummabilityMatrix::fejer();
    let term = F0Term { a: 16, eta: 2, b: 8, gamma: None, alpha: None, set: None };
    let schedule = F0Schedule { resolution: 16, terms: vec![term.clone()], samples: 16, seed: 3 };
    let r = f0_demo(&t, &schedule).unwrap();
    let tr = &r.terms[0];
    let l2 = lemma2_poly(&t, 8, &DyadicSet::new(vec![(8, 0)]).unwrap(), 16.0, 16).unwrap();
    assert_eq!(tr.alpha, 16.0);
    assert!((tr.w0_l1 - l2.poly.l1()).abs() < 1e-12);
    assert!((tr.at_scale_b.min_on_set - 16.0).abs() < 1e-9);
    assert!(tr.at_scale_b.cross_max < 1e-9);
    let p = BlockParams::with_eta(16, 2).unwrap();
    assert!((tr.w1_l1 - witness_poly(&p).l1() / 4f64.powf(0.25)).abs() < 1e-12);
    assert!(r.f0_l1 <= r.norm_sum + 1e-12);
}

#[test]
fn two_term_schedule_reports_cross_terms() {
    let t = SummabilityMatrix::fejer();
    let schedule = F0Schedule {
        resolution: 20,
        terms: vec![
            F0Term { a: 10, eta: 1, b: 4, gamma: None, alpha: None, set: None },
            F0Term { a: 20, eta: 2, b: 12, gamma: Some(16.0), alpha: None, set: Some(vec![(3, 5)]) },
        ],
        samples: 8,
        seed: 11,
    };
    let r = f0_demo(&t, &schedule).unwrap();
    assert_eq!(r.terms.len(), 2);
    for tr in &r.terms {
        assert!(tr.at_scale_b.min_on_set >= tr.alpha - tr.at_scale_b.cross_max - 1e-9);
        assert!(tr.at_witness.min_total >= tr.at_witness.min_own - tr.at_witness.max_cross - 1e-9);
        assert_eq!(tr.at_witness.samples, 8);
    }
    assert_eq!(r.terms[1].at_witness.predicted_scale, 2.0);
}
