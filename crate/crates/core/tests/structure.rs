use bdlab_core::functional::{d_vector, e_star, evaluation_analysis, l1, opnorm_l1, pairing, project_star};
use bdlab_core::shift::{compact_witness, s_apply, s_star, s_star_pow};
use bdlab_core::{Candidate, ConstructionConfig, Functional, GammaId, Interval, NetCaps, Universe, Vector, Q};
use proptest::prelude::*;

fn universe(k: usize, len: usize, horizon: usize) -> Universe {
    let caps = NetCaps { max_support: 1, denominator_bound: 1, eta_pool: Some(1) };
    let c = ConstructionConfig::relaxed_powers(k, len, horizon, caps).unwrap();
    Universe::build(c).unwrap()
}

fn base(u: &Universe, j: usize) -> GammaId {
    u.lookup(&Candidate::base(j)).unwrap()
}

#[test]
fn shift_is_nilpotent_of_order_k() {
    for k in [2, 3, 4] {
        let u = universe(k, 3, 3);
        for g in u.ids() {
            assert!(s_star_pow(&u, &e_star(g), k).is_zero(), "k = {k}, {g}");
        }
        let top = s_star_pow(&u, &e_star(base(&u, k - 1)), k - 1);
        assert_eq!(top, e_star(base(&u, 0)), "k = {k}");
    }
}

#[test]
fn images_preserve_rank_and_weight_and_stay_admissible() {
    for k in [2, 3] {
        let u = universe(k, 3, 4);
        for g in u.ids() {
            let Some(t) = u.f(g) else { continue };
            let (eg, et) = (u.element(g), u.element(t));
            assert_eq!(eg.rank, et.rank);
            assert_eq!(eg.weight_idx(), et.weight_idx());
            assert!(et.age <= eg.age);
            assert!(u.validate(&et.candidate()).unwrap().is_empty(), "image {t} of {g}");
        }
    }
}

#[test]
fn sigma_sets_grow_along_the_shift_and_separate_ranks() {
    let u = universe(3, 3, 4);
    let sets: Vec<_> = u.ids().map(|g| u.sigma_set(g).unwrap()).collect();
    for g in u.ids() {
        if let Some(t) = u.f(g) {
            assert!(sets[g.index()].is_subset(&sets[t.index()]));
        }
    }
    for a in u.ids() {
        for b in u.ids() {
            if u.rank(a) > u.rank(b) {
                assert!(sets[b.index()].last() < sets[a.index()].first());
            }
            if sets[b.index()].contains(&u.sigma(a)) {
                let reaches = a == b || (1..u.k()).any(|j| u.f_iter(a, j) == Some(b));
                assert!(reaches, "sigma({a}) in Sigma({b})");
            }
        }
    }
}

#[test]
fn evaluation_analysis_reconstructs_e_star() {
    let u = universe(3, 3, 4);
    for g in u.ids() {
        let Some(a) = evaluation_analysis(&u, g) else { continue };
        let want = e_star(g);
        assert_eq!(to_e(&u, &a.full(&u)), want, "{g}");
        for t in 1..=a.age() {
            assert_eq!(to_e(&u, &a.partial(&u, t)), want, "{g} from step {t}");
        }
    }
}

fn to_e(u: &Universe, f: &Functional) -> Functional {
    bdlab_core::functional::change_basis(u, f, bdlab_core::Basis::EStar)
}

#[test]
fn initial_projections_are_bounded_by_the_basis_constant() {
    let u = universe(2, 3, 4);
    let m = u.config().basis_constant();
    assert_eq!(m, Q::from_int(2));
    for q in 1..=4 {
        let norm = opnorm_l1(&u, u.ids(), |f| project_star(&u, &Interval::upto(q), f));
        assert!(norm <= m, "P*_(0,{q}) has norm {norm}");
    }
}

#[test]
fn compact_witnesses_expose_each_coefficient() {
    let u = universe(3, 3, 3);
    let lambdas = [Q::new(-3, 2), Q::new(2, 5), Q::from_int(-7)];
    for j in 0..3 {
        let got = compact_witness(&u, j, 1, 2, &lambdas).unwrap();
        let want: Q = lambdas[..=j].iter().map(Q::abs).sum::<Q>() * Q::from_int(2);
        assert_eq!(got, want, "family {j}");
    }
    assert_eq!(compact_witness(&u, 0, 1, 2, &lambdas).unwrap(), lambdas[0].abs() * Q::from_int(2));
}

#[test]
fn biorthogonality() {
    let u = universe(3, 3, 3);
    let h = 3;
    for g in u.ids() {
        let x = d_vector(&u, g, h).unwrap();
        for xi in u.ids() {
            let v = pairing(&u, &bdlab_core::functional::d_star(&u, xi), &x).unwrap();
            assert_eq!(v, if xi == g { Q::one() } else { Q::zero() });
        }
    }
}

fn random_vector(u: &Universe, h: usize, terms: &[(usize, i64, i64)]) -> Vector {
    let d = terms.iter().map(|&(i, p, q)| (GammaId((i % u.len()) as u32), Q::new(p, q))).collect();
    Vector::from_d_coords(u, &d, h).unwrap()
}

fn terms() -> impl Strategy<Value = Vec<(usize, i64, i64)>> {
    prop::collection::vec((0usize..1000, -9i64..=9, 1i64..=5), 0..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_duality(xt in terms(), ft in terms()) {
        let u = universe(3, 3, 3);
        let x = random_vector(&u, 3, &xt);
        let f = Functional::from_terms(
            bdlab_core::Basis::EStar,
            ft.iter().map(|&(i, p, q)| (GammaId((i % u.len()) as u32), Q::new(p, q))).collect::<std::collections::BTreeMap<_, _>>(),
        );
        let lhs = pairing(&u, &s_star(&u, &f), &x).unwrap();
        let rhs = pairing(&u, &f, &s_apply(&u, &x).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn shift_keeps_ranges(xt in terms()) {
        let u = universe(3, 3, 4);
        let x = random_vector(&u, 4, &xt);
        let sx = s_apply(&u, &x).unwrap();
        if let Some((lo, hi)) = sx.range(&u) {
            let (a, b) = x.range(&u).unwrap();
            prop_assert!(a <= lo && hi <= b);
        }
    }

    #[test]
    fn shift_is_a_contraction_on_e_star_units(i in 0usize..1000) {
        let u = universe(2, 3, 4);
        let g = GammaId((i % u.len()) as u32);
        let img = s_star(&u, &e_star(g));
        prop_assert!(l1(&u, &img) <= Q::one());
    }
}
