use bdlab_core::functional::{e_star, evaluation_analysis, pairing};
use bdlab_core::sequence::{
    build_dependent_sequence, check_exact_pair, evaluate_estimates, BlockSequence, CarrierStrategy, ChainSupplier,
    DepSeqParams, EstimateInput, PairKind, PairSupplier, ShiftedSupplier, Status,
};
use bdlab_core::shift::{s_apply_pow, s_star_pow};
use bdlab_core::{BFunctional, ConstructionConfig, NetCaps, Universe, Q};
use proptest::prelude::*;

fn micro(k: usize, len: usize, horizon: usize) -> Universe {
    let c = ConstructionConfig::relaxed_powers(k, len, horizon, NetCaps::singletons()).unwrap();
    Universe::with_base(c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_pairs_are_exact(k in 2usize..=4, length in 1usize..=3, j in 1usize..=2, zero_b: bool) {
        let mut u = micro(k, 8, 2 * length + 2 * j + 2);
        let mut s = ChainSupplier::new(length, CarrierStrategy::Explicit);
        if zero_b {
            s = s.with_zero_b();
        }
        let p = s.supply(&mut u, 2 * j, 0).unwrap();
        let ch = p.chain.as_ref().unwrap();
        prop_assert_eq!(ch.length(), length);
        for l in 0..k {
            prop_assert!(s_apply_pow(&u, &p.x, l).unwrap().at(p.eta).is_zero());
        }
        let a = evaluation_analysis(&u, p.eta).unwrap();
        prop_assert_eq!(a.p0, ch.cuts[0]);
        let ps: Vec<_> = a.steps.iter().map(|s| s.p).collect();
        prop_assert_eq!(&ps[..], &ch.cuts[1..]);
        let bs: Vec<BFunctional> = a.steps.iter().map(|s| s.b.clone()).collect();
        prop_assert_eq!(&bs, &ch.bs);
        let xis: Vec<_> = a.steps.iter().map(|s| s.xi).collect();
        prop_assert_eq!(&xis, &ch.chain);
        let r = check_exact_pair(&u, &p.x, p.eta, &Q::from_int(48), 2 * j, &PairKind::Special { delta: 0 }).unwrap();
        prop_assert!(r.identities_hold());
        // b functionals annihilate the shifted blocks.
        for (b, x) in ch.bs.iter().zip(&ch.blocks) {
            for l in 0..k {
                let f = s_star_pow(&u, &b.to_functional(), l);
                prop_assert!(pairing(&u, &f, x).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn shifted_pairs_hit_their_element(k in 2usize..=3, m in 1usize..=3, length in 1usize..=2) {
        prop_assume!(m <= k);
        let mut u = micro(k, 8, 2 * length + 2);
        let p = ShiftedSupplier::new(length, m).supply(&mut u, 2, 0).unwrap();
        let o = p.shifted.as_ref().unwrap();
        prop_assert_eq!(u.f_iter(o.gamma, m - 1), Some(p.eta));
        prop_assert_eq!(&o.x_at_eta, &Q::one());
    }
}

#[test]
fn dependent_chain_is_admissible_and_analysed() {
    let mut u = micro(2, 160, 64);
    let mut s = ChainSupplier::new(1, CarrierStrategy::Explicit);
    let params = DepSeqParams { j0: 1, length: 2, delta: 0, weak: false, c: Q::from_int(48), j1: Some(1) };
    let cert = build_dependent_sequence(&mut u, &mut s, &params).unwrap();
    assert!(cert.identities_hold());
    for &xi in &cert.xi_chain {
        assert!(u.validate(&u.element(xi).candidate()).unwrap().is_empty());
    }
    let last = *cert.xi_chain.last().unwrap();
    let a = evaluation_analysis(&u, last).unwrap();
    assert_eq!(a.p0, cert.p_seq[0]);
    for (i, step) in a.steps.iter().enumerate() {
        assert_eq!(step.p, cert.p_seq[i + 1]);
        assert_eq!(step.xi, cert.xi_chain[i]);
        assert_eq!(step.b.to_functional(), e_star(cert.eta_seq[i]));
    }
    for w in cert.eta_weight_idx.windows(2) {
        assert!(w[0] < w[1]);
    }
    assert_eq!(cert.j_seq[1], u.sigma(cert.xi_chain[0]));
}

#[test]
fn relaxed_estimate_failures_are_warnings() {
    let mut u = micro(2, 160, 64);
    let mut s = ChainSupplier::new(1, CarrierStrategy::Explicit);
    let params = DepSeqParams { j0: 1, length: 2, delta: 0, weak: false, c: Q::from_int(48), j1: Some(1) };
    let cert = build_dependent_sequence(&mut u, &mut s, &params).unwrap();
    let r = evaluate_estimates(&u, &EstimateInput::Dependent { cert: &cert, alternating: false }).unwrap();
    assert!(r.entries.iter().all(|e| e.status != Status::Fail));
    let seq = BlockSequence::new(&u, cert.xs.clone()).unwrap();
    let r = evaluate_estimates(&u, &EstimateInput::Ris { seq: &seq, c: Q::from_int(48), j0: 1 }).unwrap();
    assert!(r.entries.iter().all(|e| e.status != Status::Fail));
    assert!(r.length_capped);
}
