//! Dense Gauss–Jordan oracle for the dual basis, independent of the
//! library's triangular back-substitution.

use std::collections::BTreeMap;

use bdlab_core::functional::{change_basis, d_vector};
use bdlab_core::{BFunctional, Basis, Code, ConstructionConfig, Functional, GammaId, NetCaps, Universe, Q};
use proptest::prelude::*;

/// Inverse of a square matrix over Q by full Gauss–Jordan with pivot search.
fn inverse(a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("matrix is invertible");
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, p) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= &(&f * p);
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn row_times(y: &[Q], a: &[Vec<Q>]) -> Vec<Q> {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| y.iter().zip(a).map(|(yi, row)| yi * &row[j]).sum()).collect()
}

struct Oracle {
    /// Row `ξ` is `d*_ξ` in e*-coordinates.
    a: Vec<Vec<Q>>,
    /// Column `γ` is `d_γ`.
    a_inv: Vec<Vec<Q>>,
}

/// Rebuilds every `c*_γ` from its code: the `b` functional is cut to ranks
/// above `p` (or above the predecessor's rank) in d*-coordinates obtained
/// by dense inversion of the rows already known.
fn oracle(u: &Universe) -> Oracle {
    let n = u.len();
    let mut a = vec![vec![Q::zero(); n]; n];
    let mut known_rank = 0;
    let mut inv: Vec<Vec<Q>> = Vec::new();
    for e in u.elements() {
        if e.rank != known_rank {
            let m = u.count_upto(e.rank - 1);
            let block: Vec<Vec<Q>> = a[..m].iter().map(|r| r[..m].to_vec()).collect();
            inv = inverse(&block);
            known_rank = e.rank;
        }
        let m = inv.len();
        let tail = |b: &BFunctional, lo: usize| -> Vec<Q> {
            let mut dense = vec![Q::zero(); m];
            for (t, c) in b.terms() {
                dense[t.index()] = c.clone();
            }
            let mut y = row_times(&dense, &inv);
            for (i, v) in y.iter_mut().enumerate() {
                if u.rank(GammaId(i as u32)) <= lo {
                    *v = Q::zero();
                }
            }
            let block: Vec<Vec<Q>> = a[..m].iter().map(|r| r[..m].to_vec()).collect();
            row_times(&y, &block)
        };
        let mut c = vec![Q::zero(); m];
        match &e.code {
            Code::Base { .. } => {}
            Code::Type1 { p, weight_idx, b } => {
                let w = u.config().weight(*weight_idx);
                c = tail(b, *p).iter().map(|v| v * &w).collect();
            }
            Code::Type2 { xi, weight_idx, b } => {
                let w = u.config().weight(*weight_idx);
                c = tail(b, u.rank(*xi)).iter().map(|v| v * &w).collect();
                c[xi.index()] += &Q::one();
            }
        }
        let row = &mut a[e.id.index()];
        for (j, v) in c.into_iter().enumerate() {
            row[j] = -v;
        }
        row[e.id.index()] += &Q::one();
    }
    let a_inv = inverse(&a);
    Oracle { a, a_inv }
}

fn universe() -> Universe {
    let caps = NetCaps { max_support: 1, denominator_bound: 1, eta_pool: Some(1) };
    let c = ConstructionConfig::relaxed_powers(3, 3, 4, caps).unwrap();
    Universe::build(c).unwrap()
}

fn dense(f: &Functional, n: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    for (id, c) in f.iter() {
        v[id.index()] = c.clone();
    }
    v
}

#[test]
fn universe_size_is_in_oracle_range() {
    let u = universe();
    assert!((30..=100).contains(&u.len()), "{} elements", u.len());
}

#[test]
fn d_star_rows_match_oracle() {
    let u = universe();
    let o = oracle(&u);
    let n = u.len();
    for id in u.ids() {
        let d = bdlab_core::functional::d_star(&u, id);
        assert_eq!(dense(&d, n), o.a[id.index()], "d* of {id}");
    }
}

#[test]
fn d_vectors_match_oracle() {
    let u = universe();
    let o = oracle(&u);
    let h = u.config().horizon;
    for id in u.ids() {
        let x = d_vector(&u, id, h).unwrap();
        let col: Vec<Q> = o.a_inv.iter().map(|r| r[id.index()].clone()).collect();
        assert_eq!(x.values(), &col[..], "d_{id}");
    }
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<(usize, i64, i64)>> {
    prop::collection::vec((0..n, -6i64..=6, 1i64..=4), 1..8)
}

fn functional(basis: Basis, terms: &[(usize, i64, i64)]) -> Functional {
    let mut acc: BTreeMap<GammaId, Q> = BTreeMap::new();
    for &(i, p, q) in terms {
        *acc.entry(GammaId(i as u32)).or_default() += &Q::new(p, q);
    }
    Functional::from_terms(basis, acc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn change_basis_matches_oracle(terms in coeffs(universe().len())) {
        let u = universe();
        let o = oracle(&u);
        let n = u.len();
        // Σ a_ξ d*_ξ has e*-coordinates a·A.
        let fd = functional(Basis::DStar, &terms);
        let fe = change_basis(&u, &fd, Basis::EStar);
        prop_assert_eq!(dense(&fe, n), row_times(&dense(&fd, n), &o.a));
        // e*-coordinates g have d*-coordinates g·A^{-1}.
        let ge = functional(Basis::EStar, &terms);
        let gd = change_basis(&u, &ge, Basis::DStar);
        prop_assert_eq!(dense(&gd, n), row_times(&dense(&ge, n), &o.a_inv));
    }
}
