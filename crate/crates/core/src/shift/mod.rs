//! The partial shift `F` on Γ and the operators it induces.
//!
//! `S*` acts on e*- and d*-coordinates by the same rule, `e*_γ ↦ e*_{Fγ}`
//! and `d*_γ ↦ d*_{Fγ}`, with undefined images sent to zero. `S` is its
//! adjoint on the space side: `(Sx)(θ) = x(Fθ)`.

mod toeplitz;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::functional::{change_basis, extend, l1, project_star, Basis, Functional, Interval, Vector};
use crate::gamma::{BFunctional, Candidate, Code, GammaId, Rank, Universe};
use crate::rational::Q;

pub use toeplitz::{truncated_product, ToeplitzMatrix};

/// The image tuple of `γ` under the recursion, or `None` when undefined.
/// Lower levels must be sealed.
pub(crate) fn image_candidate(u: &Universe, id: GammaId) -> Result<Option<Candidate>> {
    let e = u.element(id);
    let rank = e.rank;
    Ok(match &e.code {
        Code::Base { index } => index.checked_sub(1).map(Candidate::base),
        Code::Type1 { p, weight_idx, b } => {
            let rb = r_star_b(u, b)?;
            if tail_is_zero(u, &rb, *p) {
                None
            } else {
                Some(Candidate::type1(rank, *p, *weight_idx, rb))
            }
        }
        Code::Type2 { xi, weight_idx, b } => {
            let rb = r_star_b(u, b)?;
            match u.image(*xi)? {
                Some(fx) => Some(Candidate::type2(rank, fx, *weight_idx, rb)),
                None => {
                    let xr = u.rank(*xi);
                    if tail_is_zero(u, &rb, xr) {
                        None
                    } else {
                        Some(Candidate::type1(rank, xr, *weight_idx, rb))
                    }
                }
            }
        }
    })
}

fn r_star_b(u: &Universe, b: &BFunctional) -> Result<BFunctional> {
    let mut terms = Vec::with_capacity(b.terms().len());
    for (eta, c) in b.terms() {
        if let Some(t) = u.image(*eta)? {
            terms.push((t, c.clone()));
        }
    }
    Ok(BFunctional::new(terms))
}

fn tail_is_zero(u: &Universe, b: &BFunctional, p: Rank) -> bool {
    project_star(u, &Interval::above(p), &b.to_functional()).is_zero()
}

/// `F(γ)`; `None` is the undefined value.
pub fn f_map(u: &Universe, id: GammaId) -> Option<GammaId> {
    u.f(id)
}

/// `S* f`, returned in the basis of `f`.
pub fn s_star(u: &Universe, f: &Functional) -> Functional {
    Functional::from_terms(f.basis(), f.iter().filter_map(|(id, c)| u.f(id).map(|t| (t, c.clone()))))
}

/// `S* f` computed in the other basis and converted back.
pub fn s_star_via_other_basis(u: &Universe, f: &Functional) -> Functional {
    let other = match f.basis() {
        Basis::EStar => Basis::DStar,
        Basis::DStar => Basis::EStar,
    };
    let g = change_basis(u, f, other);
    change_basis(u, &s_star(u, &g), f.basis())
}

pub fn s_star_pow(u: &Universe, f: &Functional, l: usize) -> Functional {
    let mut cur = f.clone();
    for _ in 0..l {
        if cur.is_zero() {
            break;
        }
        cur = s_star(u, &cur);
    }
    cur
}

/// `S x` on the horizon of `x`: `(Sx)(θ) = x(Fθ)`.
///
/// F preserves rank, so every image used stays inside `Γ_horizon`.
pub fn s_apply(u: &Universe, x: &Vector) -> Result<Vector> {
    let values: BTreeMap<GammaId, Q> =
        x.iter().filter_map(|(id, _)| u.f(id).map(|t| (id, x.at(t).clone()))).filter(|(_, q)| !q.is_zero()).collect();
    extend(u, &values, x.horizon(), x.horizon())
}

/// `S x` via `S d_δ = Σ_{F γ = δ} d_γ`.
pub fn s_apply_d_route(u: &Universe, x: &Vector) -> Result<Vector> {
    let a = x.d_coords(u);
    let mut b = BTreeMap::new();
    for (delta, c) in &a {
        for &g in u.preimages(*delta) {
            b.insert(g, c.clone());
        }
    }
    Vector::from_d_coords(u, &b, x.horizon())
}

pub fn s_apply_pow(u: &Universe, x: &Vector, l: usize) -> Result<Vector> {
    let mut cur = x.clone();
    for _ in 0..l {
        cur = s_apply(u, &cur)?;
    }
    Ok(cur)
}

/// Least `l ≥ 1` with `F^l(γ)` undefined.
pub fn nilpotency_index(u: &Universe, id: GammaId) -> usize {
    let mut l = 1;
    let mut cur = id;
    while let Some(t) = u.f(cur) {
        cur = t;
        l += 1;
    }
    l
}

/// `T = Σ λ_i (S*)^i`.
pub fn polynomial_in_s_star(u: &Universe, lambdas: &[Q], f: &Functional) -> Functional {
    let mut out = Functional::zero(f.basis());
    let mut cur = f.clone();
    for (i, lam) in lambdas.iter().enumerate() {
        if i > 0 {
            cur = s_star(u, &cur);
        }
        out.axpy(lam, &cur);
    }
    out
}

/// The witness `γ_n^j = (n+1, p = 0, m_2^{-1}, e*_j)` with `j` a base index.
pub fn witness(u: &Universe, j: usize, n: Rank) -> Result<GammaId> {
    let base = u
        .lookup(&Candidate::base(j))
        .ok_or_else(|| Error::Precondition(format!("base element {j} is not materialized")))?;
    let cand = Candidate::type1(n + 1, 0, 2, BFunctional::unit(base));
    if n + 1 > u.sealed_rank() {
        return Err(Error::BeyondHorizon { rank: n + 1, horizon: u.sealed_rank() });
    }
    u.lookup(&cand).ok_or_else(|| Error::Precondition(format!("witness {cand} is not materialized")))
}

/// `‖T(e*_{γ_n^j}) - T(e*_{γ_m^j})‖₁` for `T = Σ λ_i (S*)^i`.
pub fn compact_witness(u: &Universe, j: usize, n: Rank, m: Rank, lambdas: &[Q]) -> Result<Q> {
    if n >= m {
        return Err(Error::Precondition(format!("witness ranks must satisfy n < m, got {n}, {m}")));
    }
    let a = witness(u, j, n)?;
    let b = witness(u, j, m)?;
    let diff = Functional::from_terms(Basis::EStar, [(a, Q::one()), (b, -Q::one())]);
    Ok(l1(u, &polynomial_in_s_star(u, lambdas, &diff)))
}

/// Rank of `{S^0, …, S^{k-1}}` as matrices on `Γ_horizon` in e-coordinates,
/// by exact elimination.
pub fn shift_power_family_rank(u: &Universe, horizon: Rank) -> usize {
    let n = u.count_upto(horizon);
    let rows: Vec<BTreeMap<(u32, u32), Q>> = (0..u.k())
        .map(|i| (0..n as u32).filter_map(|t| u.f_iter(GammaId(t), i).map(|img| ((t, img.0), Q::one()))).collect())
        .collect();
    sparse_rank(rows)
}

pub(crate) fn sparse_rank<K: Ord + Clone>(mut rows: Vec<BTreeMap<K, Q>>) -> usize {
    let mut rank = 0;
    let mut i = 0;
    while i < rows.len() {
        let Some((pivot, pv)) = rows[i].iter().next().map(|(k, v)| (k.clone(), v.clone())) else {
            rows.swap_remove(i);
            continue;
        };
        let pivot_row = rows[i].clone();
        for (j, row) in rows.iter_mut().enumerate() {
            if j == i {
                continue;
            }
            if let Some(c) = row.get(&pivot).cloned() {
                let factor = c / &pv;
                for (k, v) in &pivot_row {
                    let slot = row.entry(k.clone()).or_default();
                    *slot -= &(&factor * v);
                    if slot.is_zero() {
                        row.remove(k);
                    }
                }
            }
        }
        rank += 1;
        i += 1;
    }
    rank
}
