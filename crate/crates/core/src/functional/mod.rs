//! Exact sparse linear algebra on both sides of the duality.
//!
//! Functionals live in `ℓ₁(Γ)` and are stored in e*- or d*-coordinates.
//! Vectors live on the `ℓ∞` side: a [`Vector`] of horizon `N` stores its
//! value `x(θ)` at every θ of rank `≤ N` and stands for the unique element
//! of `span{d_γ : rank γ ≤ N}` with those values.
//!
//! Rank windows are half-open, `(lo, hi]`.

mod analysis;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{Candidate, Code, GammaId, Rank, Universe};
use crate::rational::Q;

pub use analysis::{evaluation_analysis, AnalysisStep, EvaluationAnalysis};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    EStar,
    DStar,
}

/// A finitely supported functional; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Functional {
    basis: Basis,
    coords: BTreeMap<GammaId, Q>,
}

impl Functional {
    pub fn zero(basis: Basis) -> Self {
        Functional { basis, coords: BTreeMap::new() }
    }

    pub fn unit(basis: Basis, id: GammaId) -> Self {
        Functional { basis, coords: BTreeMap::from([(id, Q::one())]) }
    }

    pub fn from_terms(basis: Basis, terms: impl IntoIterator<Item = (GammaId, Q)>) -> Self {
        let mut f = Functional::zero(basis);
        for (id, c) in terms {
            f.add_term(id, &c);
        }
        f
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn get(&self, id: GammaId) -> Q {
        self.coords.get(&id).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GammaId, &Q)> + '_ {
        self.coords.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn max_id(&self) -> Option<GammaId> {
        self.coords.keys().next_back().copied()
    }

    pub fn add_term(&mut self, id: GammaId, c: &Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.coords.entry(id).or_default();
        *slot += c;
        if slot.is_zero() {
            self.coords.remove(&id);
        }
    }

    /// `self += a · other`; both must share a basis.
    pub fn axpy(&mut self, a: &Q, other: &Functional) {
        assert_eq!(self.basis, other.basis, "basis mismatch");
        if a.is_zero() {
            return;
        }
        for (id, c) in other.iter() {
            self.add_term(id, &(a * c));
        }
    }

    pub fn scaled(&self, a: &Q) -> Functional {
        let mut out = Functional::zero(self.basis);
        out.axpy(a, self);
        out
    }

    pub fn plus(&self, other: &Functional) -> Functional {
        let mut out = self.clone();
        out.axpy(&Q::one(), other);
        out
    }

    pub fn minus(&self, other: &Functional) -> Functional {
        let mut out = self.clone();
        out.axpy(&-Q::one(), other);
        out
    }

    /// Sum of absolute coordinates in the stored basis.
    pub fn coord_l1(&self) -> Q {
        self.coords.values().map(|c| c.abs()).sum()
    }

    fn retain(&mut self, mut keep: impl FnMut(GammaId) -> bool) {
        self.coords.retain(|id, _| keep(*id));
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.basis {
            Basis::EStar => "e*",
            Basis::DStar => "d*",
        };
        write!(f, "{tag}[")?;
        for (i, (id, c)) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", id.0, c)?;
        }
        f.write_str("]")
    }
}

/// Half-open rank window `(lo, hi]`; `hi = None` is `+∞`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rank,
    pub hi: Option<Rank>,
}

impl Interval {
    pub fn new(lo: Rank, hi: Option<Rank>) -> Self {
        Interval { lo, hi }
    }

    /// `(0, q]`.
    pub fn upto(q: Rank) -> Self {
        Interval { lo: 0, hi: Some(q) }
    }

    /// `(p, ∞)`.
    pub fn above(p: Rank) -> Self {
        Interval { lo: p, hi: None }
    }

    pub fn all() -> Self {
        Interval::above(0)
    }

    pub fn contains(&self, r: Rank) -> bool {
        r > self.lo && self.hi.is_none_or(|h| r <= h)
    }

    pub fn is_empty(&self) -> bool {
        self.hi.is_some_and(|h| h <= self.lo)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        Interval { lo: self.lo.max(other.lo), hi }
    }

    /// The complement inside `(0, ∞)` of an initial window `(0, q]`.
    pub fn complement_of_initial(q: Rank) -> Interval {
        Interval::above(q)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (self.lo >= other.lo && other.hi.is_none_or(|h| self.hi.is_some_and(|s| s <= h)))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "({}, {}]", self.lo, h),
            None => write!(f, "({}, inf)", self.lo),
        }
    }
}

pub(crate) fn compute_c_star(u: &Universe, cand: &Candidate) -> Functional {
    let cfg = u.config();
    match &cand.code {
        Code::Base { .. } => Functional::zero(Basis::EStar),
        Code::Type1 { p, weight_idx, b } => tail_e(u, &b.to_functional(), *p).scaled(&cfg.weight(*weight_idx)),
        Code::Type2 { xi, weight_idx, b } => {
            let mut c = tail_e(u, &b.to_functional(), u.rank(*xi)).scaled(&cfg.weight(*weight_idx));
            c.add_term(*xi, &Q::one());
            c
        }
    }
}

/// `P*_{(p,∞)} f` for `f` in e*-coordinates, result in e*-coordinates.
fn tail_e(u: &Universe, f: &Functional, p: Rank) -> Functional {
    let mut d = e_to_d(u, f);
    d.retain(|id| u.rank(id) > p);
    d_to_e(u, &d)
}

/// Back-substitution `e*_θ = d*_θ + c*_θ`, eliminating the largest id.
fn e_to_d(u: &Universe, f: &Functional) -> Functional {
    let mut work = f.coords.clone();
    let mut out = Functional::zero(Basis::DStar);
    while let Some((id, a)) = work.pop_last() {
        for (t, c) in u.c_star(id).iter() {
            let slot = work.entry(t).or_default();
            *slot += &a * c;
            if slot.is_zero() {
                work.remove(&t);
            }
        }
        out.coords.insert(id, a);
    }
    out
}

/// Direct sum `Σ a_θ (e*_θ − c*_θ)`.
fn d_to_e(u: &Universe, f: &Functional) -> Functional {
    let mut out = Functional::zero(Basis::EStar);
    for (id, a) in f.iter() {
        out.add_term(id, a);
        for (t, c) in u.c_star(id).iter() {
            out.add_term(t, &-(a * c));
        }
    }
    out
}

pub fn c_star(u: &Universe, id: GammaId) -> Functional {
    u.c_star(id).clone()
}

/// `d*_γ = e*_γ − c*_γ` in e*-coordinates.
pub fn d_star(u: &Universe, id: GammaId) -> Functional {
    let mut f = u.c_star(id).scaled(&-Q::one());
    f.add_term(id, &Q::one());
    f
}

pub fn e_star(id: GammaId) -> Functional {
    Functional::unit(Basis::EStar, id)
}

pub fn change_basis(u: &Universe, f: &Functional, target: Basis) -> Functional {
    match (f.basis, target) {
        (a, b) if a == b => f.clone(),
        (Basis::EStar, Basis::DStar) => e_to_d(u, f),
        _ => d_to_e(u, f),
    }
}

/// `P*_I f`: restriction of the d*-coordinates to ranks in `I`. The
/// result is in the basis of `f`.
pub fn project_star(u: &Universe, interval: &Interval, f: &Functional) -> Functional {
    let mut d = change_basis(u, f, Basis::DStar);
    d.retain(|id| interval.contains(u.rank(id)));
    change_basis(u, &d, f.basis)
}

/// ℓ₁ norm, computed in e*-coordinates.
pub fn l1(u: &Universe, f: &Functional) -> Q {
    change_basis(u, f, Basis::EStar).coord_l1()
}

/// Exact ℓ₁ operator norm of a linear map given by its action on e*-units:
/// the largest image norm over `columns`.
pub fn opnorm_l1<F>(u: &Universe, columns: impl IntoIterator<Item = GammaId>, mut op: F) -> Q
where
    F: FnMut(&Functional) -> Functional,
{
    columns.into_iter().map(|id| l1(u, &op(&e_star(id)))).fold(Q::zero(), Q::max)
}

/// A vector on the `ℓ∞` side, exact on `Γ_horizon`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Vector {
    horizon: Rank,
    coords: Vec<Q>,
}

impl Vector {
    fn check_sealed(u: &Universe, horizon: Rank) -> Result<()> {
        if u.sealed_rank() < horizon {
            return Err(Error::Unsealed { rank: u.sealed_rank() + 1 });
        }
        Ok(())
    }

    pub fn zero(u: &Universe, horizon: Rank) -> Result<Self> {
        Self::check_sealed(u, horizon)?;
        Ok(Vector { horizon, coords: vec![Q::zero(); u.count_upto(horizon)] })
    }

    /// `Σ a_γ d_γ` from d-coordinates supported in `Γ_horizon`.
    pub fn from_d_coords(u: &Universe, d: &BTreeMap<GammaId, Q>, horizon: Rank) -> Result<Self> {
        Self::check_sealed(u, horizon)?;
        if let Some((&id, _)) = d.iter().next_back() {
            if u.rank(id) > horizon {
                return Err(Error::BeyondHorizon { rank: u.rank(id), horizon });
            }
        }
        let n = u.count_upto(horizon);
        let mut coords = Vec::with_capacity(n);
        for i in 0..n {
            let id = GammaId(i as u32);
            let mut v = d.get(&id).cloned().unwrap_or_default();
            for (t, c) in u.c_star(id).iter() {
                let xt: &Q = &coords[t.index()];
                if !xt.is_zero() {
                    v += c * xt;
                }
            }
            coords.push(v);
        }
        Ok(Vector { horizon, coords })
    }

    pub fn horizon(&self) -> Rank {
        self.horizon
    }

    /// `x(θ)`; zero outside `Γ_horizon` is not implied, so this panics there.
    pub fn at(&self, id: GammaId) -> &Q {
        &self.coords[id.index()]
    }

    pub fn values(&self) -> &[Q] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (GammaId, &Q)> + '_ {
        self.coords.iter().enumerate().map(|(i, q)| (GammaId(i as u32), q))
    }

    /// The same element of `span{d_γ}` evaluated on a larger horizon.
    pub fn lift(&self, u: &Universe, horizon: Rank) -> Result<Vector> {
        if horizon <= self.horizon {
            let n = u.count_upto(horizon);
            return Ok(Vector { horizon, coords: self.coords[..n].to_vec() });
        }
        Self::check_sealed(u, horizon)?;
        let n = u.count_upto(horizon);
        let mut coords = self.coords.clone();
        for i in coords.len()..n {
            let mut v = Q::zero();
            for (t, c) in u.c_star(GammaId(i as u32)).iter() {
                let xt: &Q = &coords[t.index()];
                if !xt.is_zero() {
                    v += c * xt;
                }
            }
            coords.push(v);
        }
        Ok(Vector { horizon, coords })
    }

    /// Coefficients `a_θ = ⟨d*_θ, x⟩` in the d-basis.
    pub fn d_coords(&self, u: &Universe) -> BTreeMap<GammaId, Q> {
        let mut out = BTreeMap::new();
        for (id, x) in self.iter() {
            let mut a = x.clone();
            for (t, c) in u.c_star(id).iter() {
                a -= &(c * &self.coords[t.index()]);
            }
            if !a.is_zero() {
                out.insert(id, a);
            }
        }
        out
    }

    pub fn plus(&self, other: &Vector) -> Vector {
        assert_eq!(self.horizon, other.horizon, "horizon mismatch");
        Vector { horizon: self.horizon, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn minus(&self, other: &Vector) -> Vector {
        self.plus(&other.scaled(&-Q::one()))
    }

    pub fn scaled(&self, a: &Q) -> Vector {
        Vector { horizon: self.horizon, coords: self.coords.iter().map(|x| a * x).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Q::is_zero)
    }

    /// `max |x(θ)|` over `Γ_horizon`; a lower bound for the true norm.
    pub fn sup(&self) -> Q {
        self.coords.iter().map(Q::abs).fold(Q::zero(), Q::max)
    }

    /// `(min, max)` rank of the d-support, `None` for zero.
    pub fn range(&self, u: &Universe) -> Option<(Rank, Rank)> {
        let d = self.d_coords(u);
        let lo = d.keys().next().map(|&id| u.rank(id))?;
        let hi = d.keys().next_back().map(|&id| u.rank(id))?;
        Some((lo, hi))
    }
}

pub fn d_vector(u: &Universe, id: GammaId, horizon: Rank) -> Result<Vector> {
    if u.rank(id) > horizon {
        return Err(Error::BeyondHorizon { rank: u.rank(id), horizon });
    }
    Vector::from_d_coords(u, &BTreeMap::from([(id, Q::one())]), horizon)
}

/// `i_q(u)`: the element of `span{d_γ : rank γ ≤ q}` whose restriction to
/// `Γ_q` is `values`, evaluated on `Γ_horizon`.
pub fn extend(u: &Universe, values: &BTreeMap<GammaId, Q>, q: Rank, horizon: Rank) -> Result<Vector> {
    if q > horizon {
        return Err(Error::Precondition(format!("extension rank {q} above horizon {horizon}")));
    }
    if let Some((&id, _)) = values.iter().next_back() {
        if u.rank(id) > q {
            return Err(Error::BeyondHorizon { rank: u.rank(id), horizon: q });
        }
    }
    Vector::check_sealed(u, horizon)?;
    let n = u.count_upto(q);
    let base = Vector {
        horizon: q,
        coords: (0..n).map(|i| values.get(&GammaId(i as u32)).cloned().unwrap_or_default()).collect(),
    };
    base.lift(u, horizon)
}

/// `P_I x` via restriction of the d-coordinates.
pub fn project_x(u: &Universe, interval: &Interval, x: &Vector) -> Result<Vector> {
    let mut d = x.d_coords(u);
    d.retain(|id, _| interval.contains(u.rank(*id)));
    Vector::from_d_coords(u, &d, x.horizon)
}

/// `⟨f, x⟩`, exact; `f` may be in either basis.
pub fn pairing(u: &Universe, f: &Functional, x: &Vector) -> Result<Q> {
    let fe = change_basis(u, f, Basis::EStar);
    if let Some(id) = fe.max_id() {
        if u.rank(id) > x.horizon {
            return Err(Error::BeyondHorizon { rank: u.rank(id), horizon: x.horizon });
        }
    }
    Ok(fe.iter().map(|(id, c)| c * x.at(id)).sum())
}
