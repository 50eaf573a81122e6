//! The coded index set: elements, interning, levels, σ and Σ.
//!
//! A [`Universe`] is built level by level. Exactly one level is open at a
//! time; interning into it assigns an id, a σ value and the coding
//! functional c*. Sealing a level computes the shift map on it (interning
//! any missing images) and freezes it. After sealing, a level never
//! changes, so every quantity derived from it is stable.
//!
//! Ids increase with rank: every id at rank `r` is smaller than every id
//! at rank `r + 1`.

mod dump;
mod enumerate;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::ConstructionConfig;
use crate::error::{Error, Result};
use crate::functional::{self, Basis, Functional};
use crate::rational::Q;
use crate::shift;

pub use validate::Violation;

pub type Rank = usize;

/// Interned element handle; index into the universe's element table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaId(pub u32);

impl GammaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GammaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A finitely supported combination `Σ a_η e*_η`.
///
/// Terms are sorted by id with no zero coefficients, so structural
/// equality is equality of functionals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct BFunctional {
    terms: Vec<(GammaId, Q)>,
}

impl BFunctional {
    pub fn zero() -> Self {
        BFunctional { terms: Vec::new() }
    }

    pub fn unit(eta: GammaId) -> Self {
        BFunctional { terms: vec![(eta, Q::one())] }
    }

    pub fn single(eta: GammaId, coeff: Q) -> Self {
        Self::new(vec![(eta, coeff)])
    }

    pub fn new(terms: impl IntoIterator<Item = (GammaId, Q)>) -> Self {
        let mut map = std::collections::BTreeMap::<GammaId, Q>::new();
        for (id, c) in terms {
            *map.entry(id).or_default() += c;
        }
        BFunctional { terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn terms(&self) -> &[(GammaId, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn l1(&self) -> Q {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }

    /// `Some(η)` when this is exactly `e*_η`.
    pub fn as_unit(&self) -> Option<GammaId> {
        match self.terms.as_slice() {
            [(eta, c)] if c.is_one() => Some(*eta),
            _ => None,
        }
    }

    pub fn to_functional(&self) -> Functional {
        Functional::from_terms(Basis::EStar, self.terms.iter().cloned())
    }

    pub fn from_functional(f: &Functional) -> Self {
        debug_assert_eq!(f.basis(), Basis::EStar);
        BFunctional::new(f.iter().map(|(id, c)| (id, c.clone())))
    }
}

impl fmt::Display for BFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (id, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", id.0, c)?;
        }
        Ok(())
    }
}

/// The coding of an element. The derived order, together with the rank
/// in [`Candidate`], is the canonical enumeration order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Code {
    Base { index: usize },
    Type1 { p: Rank, weight_idx: usize, b: BFunctional },
    Type2 { xi: GammaId, weight_idx: usize, b: BFunctional },
}

impl Code {
    pub fn tag(&self) -> &'static str {
        match self {
            Code::Base { .. } => "base",
            Code::Type1 { .. } => "t1",
            Code::Type2 { .. } => "t2",
        }
    }

    pub fn weight_idx(&self) -> Option<usize> {
        match self {
            Code::Base { .. } => None,
            Code::Type1 { weight_idx, .. } | Code::Type2 { weight_idx, .. } => Some(*weight_idx),
        }
    }

    pub fn b(&self) -> Option<&BFunctional> {
        match self {
            Code::Base { .. } => None,
            Code::Type1 { b, .. } | Code::Type2 { b, .. } => Some(b),
        }
    }
}

/// An element shape before interning.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub rank: Rank,
    pub code: Code,
}

impl Candidate {
    pub fn base(index: usize) -> Self {
        Candidate { rank: 1, code: Code::Base { index } }
    }

    pub fn type1(rank: Rank, p: Rank, weight_idx: usize, b: BFunctional) -> Self {
        Candidate { rank, code: Code::Type1 { p, weight_idx, b } }
    }

    pub fn type2(rank: Rank, xi: GammaId, weight_idx: usize, b: BFunctional) -> Self {
        Candidate { rank, code: Code::Type2 { xi, weight_idx, b } }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.code {
            Code::Base { index } => write!(f, "({index})"),
            Code::Type1 { p, weight_idx, b } => {
                write!(f, "({}, p={}, m_{}, [{}])", self.rank, p, weight_idx, b)
            }
            Code::Type2 { xi, weight_idx, b } => {
                write!(f, "({}, xi={}, m_{}, [{}])", self.rank, xi, weight_idx, b)
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Element {
    pub id: GammaId,
    pub rank: Rank,
    pub code: Code,
    /// 0 for base elements, 1 for Type-1, `1 + age ξ` for Type-2.
    pub age: usize,
    pub sigma: u64,
}

impl Element {
    pub fn weight_idx(&self) -> Option<usize> {
        self.code.weight_idx()
    }

    pub fn is_base(&self) -> bool {
        matches!(self.code, Code::Base { .. })
    }

    pub fn is_odd(&self) -> bool {
        self.weight_idx().is_some_and(|w| w % 2 == 1)
    }

    pub fn candidate(&self) -> Candidate {
        Candidate { rank: self.rank, code: self.code.clone() }
    }
}

/// σ values in intern order under `σ = max(counter, rank) + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SigmaTable {
    sigma: Vec<u64>,
    next_counter: u64,
}

impl SigmaTable {
    fn assign(&mut self, rank: Rank) -> u64 {
        let s = self.next_counter.max(rank as u64) + 1;
        self.next_counter = s;
        self.sigma.push(s);
        s
    }

    pub fn get(&self, id: GammaId) -> u64 {
        self.sigma[id.index()]
    }

    pub fn next_counter(&self) -> u64 {
        self.next_counter
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Universe {
    config: ConstructionConfig,
    elements: Vec<Element>,
    index: HashMap<Candidate, GammaId>,
    /// `levels[r - 1]` is the id range of rank `r`.
    levels: Vec<Range<u32>>,
    sealed: Rank,
    sigma: SigmaTable,
    c_star: Vec<Functional>,
    image: Vec<Option<GammaId>>,
    preimages: Vec<Vec<GammaId>>,
    pool: Vec<bool>,
}

impl Universe {
    /// An empty universe; nothing is open or sealed.
    pub fn new(config: ConstructionConfig) -> Self {
        Universe {
            config,
            elements: Vec::new(),
            index: HashMap::new(),
            levels: Vec::new(),
            sealed: 0,
            sigma: SigmaTable::default(),
            c_star: Vec::new(),
            image: Vec::new(),
            preimages: Vec::new(),
            pool: Vec::new(),
        }
    }

    /// A universe holding only the sealed base level.
    pub fn with_base(config: ConstructionConfig) -> Result<Self> {
        let mut u = Universe::new(config);
        u.enumerate_level(1)?;
        Ok(u)
    }

    /// Enumerates every level up to the configured horizon.
    pub fn build(config: ConstructionConfig) -> Result<Self> {
        let mut u = Universe::new(config);
        for r in 1..=u.config.horizon {
            u.enumerate_level(r)?;
        }
        Ok(u)
    }

    pub fn config(&self) -> &ConstructionConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, id: GammaId) -> &Element {
        &self.elements[id.index()]
    }

    pub fn get(&self, id: GammaId) -> Option<&Element> {
        self.elements.get(id.index())
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn ids(&self) -> impl Iterator<Item = GammaId> + '_ {
        (0..self.elements.len() as u32).map(GammaId)
    }

    pub fn rank(&self, id: GammaId) -> Rank {
        self.elements[id.index()].rank
    }

    pub fn weight_idx(&self, id: GammaId) -> Option<usize> {
        self.elements[id.index()].weight_idx()
    }

    /// Highest rank that has been opened (sealed or not).
    pub fn top_rank(&self) -> Rank {
        self.levels.len()
    }

    pub fn sealed_rank(&self) -> Rank {
        self.sealed
    }

    pub fn is_sealed(&self, rank: Rank) -> bool {
        rank <= self.sealed
    }

    /// Ids of rank exactly `rank`, empty when the level was never opened.
    pub fn level(&self, rank: Rank) -> impl Iterator<Item = GammaId> {
        let r = self.levels.get(rank.wrapping_sub(1)).cloned().unwrap_or(0..0);
        r.map(GammaId)
    }

    pub fn level_len(&self, rank: Rank) -> usize {
        self.levels.get(rank.wrapping_sub(1)).map_or(0, |r| r.len())
    }

    /// Number of ids of rank at most `rank`; ids below this bound are
    /// exactly `Γ_rank`.
    pub fn count_upto(&self, rank: Rank) -> usize {
        let r = rank.min(self.levels.len());
        if r == 0 {
            0
        } else {
            self.levels[r - 1].end as usize
        }
    }

    pub fn ids_upto(&self, rank: Rank) -> impl Iterator<Item = GammaId> {
        (0..self.count_upto(rank) as u32).map(GammaId)
    }

    pub fn lookup(&self, cand: &Candidate) -> Option<GammaId> {
        self.index.get(cand).copied()
    }

    pub fn sigma(&self, id: GammaId) -> u64 {
        self.sigma.get(id)
    }

    pub fn sigma_table(&self) -> &SigmaTable {
        &self.sigma
    }

    /// Coding functional c*_γ in e*-coordinates.
    pub fn c_star(&self, id: GammaId) -> &Functional {
        &self.c_star[id.index()]
    }

    /// Shift image; `None` is the undefined value.
    pub fn image(&self, id: GammaId) -> Result<Option<GammaId>> {
        let r = self.rank(id);
        if !self.is_sealed(r) {
            return Err(Error::Unsealed { rank: r });
        }
        Ok(self.image[id.index()])
    }

    /// Shift image of an element whose level is sealed.
    ///
    /// Panics when the level is still open.
    pub fn f(&self, id: GammaId) -> Option<GammaId> {
        self.image(id).expect("shift map is defined on sealed levels")
    }

    /// `F^j(γ)`, `None` as soon as an iterate is undefined.
    pub fn f_iter(&self, id: GammaId, j: usize) -> Option<GammaId> {
        let mut cur = id;
        for _ in 0..j {
            cur = self.f(cur)?;
        }
        Some(cur)
    }

    pub fn preimages(&self, id: GammaId) -> &[GammaId] {
        &self.preimages[id.index()]
    }

    /// Whether `id` belongs to the enumeration pool of its level.
    pub fn in_pool(&self, id: GammaId) -> bool {
        self.pool[id.index()]
    }

    /// `Σ(γ) = {σ(γ)} ∪ σ(F^{-j}(γ))` for `j = 1..k-1`.
    pub fn sigma_set(&self, id: GammaId) -> Result<BTreeSet<u64>> {
        let r = self.rank(id);
        if !self.is_sealed(r) {
            return Err(Error::Unsealed { rank: r });
        }
        let mut out = BTreeSet::from([self.sigma(id)]);
        let mut frontier = vec![id];
        for _ in 1..self.k() {
            let mut next = Vec::new();
            for t in frontier {
                for &pre in self.preimages(t) {
                    out.insert(self.sigma(pre));
                    next.push(pre);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(out)
    }

    /// Checks a candidate against every admissibility clause.
    ///
    /// `Err` signals a structural problem (dangling reference or an
    /// unsealed constituent level); `Ok(vec![])` means admissible.
    pub fn validate(&self, cand: &Candidate) -> Result<Vec<Violation>> {
        validate::validate(self, cand)
    }

    /// Opens levels up to `rank`, sealing everything below it. Levels
    /// skipped over stay empty.
    pub fn advance_to(&mut self, rank: Rank) -> Result<()> {
        if rank > self.config.horizon {
            return Err(Error::HorizonExceeded { requested: rank, horizon: self.config.horizon });
        }
        if rank <= self.sealed {
            return Err(Error::LevelOrder { requested: rank, next: self.sealed + 1 });
        }
        while self.top_rank() < rank {
            if self.top_rank() > self.sealed {
                self.seal_level()?;
            }
            let start = self.elements.len() as u32;
            self.levels.push(start..start);
        }
        Ok(())
    }

    /// Interns a candidate, returning the existing id for a known shape.
    ///
    /// A candidate above the open level first seals the open level and
    /// opens (possibly empty) levels up to its rank.
    pub fn intern(&mut self, cand: Candidate) -> Result<GammaId> {
        if let Some(id) = self.lookup(&cand) {
            return Ok(id);
        }
        if cand.rank != self.top_rank() || self.is_sealed(cand.rank) {
            self.advance_to(cand.rank)?;
        }
        let violations = self.validate(&cand)?;
        if !violations.is_empty() {
            return Err(Error::Inadmissible(violations));
        }
        self.insert(cand)
    }

    fn insert(&mut self, cand: Candidate) -> Result<GammaId> {
        if self.elements.len() >= self.config.max_elements {
            return Err(Error::ElementCap(self.config.max_elements));
        }
        let id = GammaId(self.elements.len() as u32);
        let age = match &cand.code {
            Code::Base { .. } => 0,
            Code::Type1 { .. } => 1,
            Code::Type2 { xi, .. } => 1 + self.element(*xi).age,
        };
        let c = functional::compute_c_star(self, &cand);
        let sigma = self.sigma.assign(cand.rank);
        self.elements.push(Element { id, rank: cand.rank, code: cand.code.clone(), age, sigma });
        self.c_star.push(c);
        self.image.push(None);
        self.preimages.push(Vec::new());
        self.pool.push(false);
        self.index.insert(cand, id);
        self.levels.last_mut().expect("a level is open").end = id.0 + 1;
        Ok(id)
    }

    /// Seals the open level: computes the shift map on it, closes it under
    /// the map, and fixes the enumeration pool.
    pub fn seal_level(&mut self) -> Result<()> {
        let rank = self.top_rank();
        if rank == 0 || self.is_sealed(rank) {
            return Err(Error::LevelOrder { requested: rank + 1, next: self.sealed + 1 });
        }
        let start = self.levels[rank - 1].start;
        let mut i = start;
        while i < self.levels[rank - 1].end {
            let id = GammaId(i);
            let img = match shift::image_candidate(self, id)? {
                None => None,
                Some(cand) => Some(match self.lookup(&cand) {
                    Some(t) => t,
                    None => {
                        let v = self.validate(&cand)?;
                        if !v.is_empty() {
                            return Err(Error::Invariant(format!(
                                "shift image {cand} of {id} is not admissible: {}",
                                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
                            )));
                        }
                        self.insert(cand)?
                    }
                }),
            };
            self.image[id.index()] = img;
            i += 1;
        }
        for i in start..self.levels[rank - 1].end {
            if let Some(t) = self.image[i as usize] {
                self.preimages[t.index()].push(GammaId(i));
            }
        }
        self.mark_pool(rank);
        self.sealed = rank;
        Ok(())
    }

    /// Seals every level up to `rank`, opening empty ones as needed.
    pub fn seal_through(&mut self, rank: Rank) -> Result<()> {
        if rank <= self.sealed {
            return Ok(());
        }
        if self.top_rank() < rank {
            self.advance_to(rank)?;
        }
        while self.sealed < rank {
            if self.top_rank() == self.sealed {
                let start = self.elements.len() as u32;
                self.levels.push(start..start);
            }
            self.seal_level()?;
        }
        Ok(())
    }

    fn mark_pool(&mut self, rank: Rank) {
        let range = self.levels[rank - 1].clone();
        let cap = match self.config.net_caps.eta_pool {
            Some(p) if rank > 1 => p,
            _ => usize::MAX,
        };
        let mut taken: HashMap<Option<usize>, usize> = HashMap::new();
        let mut stack = Vec::new();
        for i in range {
            let id = GammaId(i);
            let n = taken.entry(self.weight_idx(id)).or_default();
            if *n < cap {
                *n += 1;
                stack.push(id);
            }
        }
        while let Some(id) = stack.pop() {
            if self.pool[id.index()] {
                continue;
            }
            self.pool[id.index()] = true;
            if let Some(t) = self.image[id.index()] {
                stack.push(t);
            }
        }
    }

    /// Opens level `rank`, interns every admissible candidate drawn from
    /// the capped net in canonical order, and seals it.
    pub fn enumerate_level(&mut self, rank: Rank) -> Result<Vec<GammaId>> {
        if rank != self.sealed + 1 || self.top_rank() > self.sealed {
            return Err(Error::LevelOrder { requested: rank, next: self.sealed + 1 });
        }
        self.advance_to(rank)?;
        let mut cands = enumerate::candidates(self, rank)?;
        cands.sort();
        cands.dedup();
        for cand in cands {
            let violations = self.validate(&cand)?;
            if !violations.is_empty() {
                return Err(Error::Invariant(format!(
                    "enumerated candidate {cand} is not admissible: {}",
                    violations.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
                )));
            }
            if self.lookup(&cand).is_none() {
                self.insert(cand)?;
            }
        }
        self.seal_level()?;
        Ok(self.level(rank).collect())
    }

    /// Canonical text dump, one element per line.
    pub fn dump(&self) -> String {
        dump::dump(self)
    }

    /// `(rank, |Δ_rank|)` for every opened level.
    pub fn level_counts(&self) -> Vec<(Rank, usize)> {
        (1..=self.top_rank()).map(|r| (r, self.level_len(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetCaps;

    fn cfg(k: usize, horizon: Rank) -> ConstructionConfig {
        ConstructionConfig::relaxed_powers(k, 6, horizon, NetCaps::singletons()).unwrap()
    }

    #[test]
    fn base_sigma_follows_counter_rule() {
        let u = Universe::with_base(cfg(3, 3)).unwrap();
        let sig: Vec<u64> = u.level(1).map(|id| u.sigma(id)).collect();
        assert_eq!(sig, vec![2, 3, 4]);
        assert_eq!(u.sigma_table().next_counter(), 4);
    }

    #[test]
    fn intern_is_idempotent() {
        let mut u = Universe::with_base(cfg(2, 3)).unwrap();
        let c = Candidate::type1(2, 0, 2, BFunctional::unit(GammaId(0)));
        let a = u.intern(c.clone()).unwrap();
        let b = u.intern(c).unwrap();
        assert_eq!(a, b);
        assert_eq!(u.len(), 3);
    }

    #[test]
    fn later_rank_sigma_dominates() {
        let u = Universe::build(cfg(2, 3)).unwrap();
        let max2 = u.level(2).map(|id| u.sigma(id)).max().unwrap();
        for id in u.level(3) {
            assert!(u.sigma(id) > max2);
            assert!(u.sigma(id) > 3);
        }
    }

    #[test]
    fn base_sigma_set_collects_the_chain() {
        let u = Universe::with_base(cfg(3, 1)).unwrap();
        let s = u.sigma_set(GammaId(0)).unwrap();
        assert_eq!(s, BTreeSet::from([2, 3, 4]));
        assert_eq!(u.sigma_set(GammaId(2)).unwrap(), BTreeSet::from([4]));
    }

    #[test]
    fn level_one_has_k_elements() {
        for k in 2..5 {
            let u = Universe::build(cfg(k, 1)).unwrap();
            assert_eq!(u.len(), k);
        }
    }

    #[test]
    fn rank_two_singleton_net_has_five_elements() {
        let u = Universe::build(cfg(2, 2)).unwrap();
        assert_eq!(u.level_len(2), 5);
        let odd: Vec<_> = u.level(2).filter(|&id| u.element(id).is_odd()).collect();
        assert_eq!(odd.len(), 1);
        assert_eq!(u.element(odd[0]).code.b(), Some(&BFunctional::zero()));
        for s in [Q::one(), -Q::one()] {
            for eta in [GammaId(0), GammaId(1)] {
                let c = Candidate::type1(2, 0, 2, BFunctional::single(eta, s.clone()));
                assert!(u.lookup(&c).is_some(), "{c}");
            }
        }
    }

    #[test]
    fn empty_net_keeps_only_zero_odd_elements() {
        let caps = NetCaps { max_support: 0, denominator_bound: 1, eta_pool: None };
        let c = ConstructionConfig::relaxed_powers(2, 6, 4, caps).unwrap();
        let u = Universe::build(c).unwrap();
        for e in u.elements().iter().filter(|e| !e.is_base()) {
            assert!(e.is_odd(), "{:?}", e);
            assert!(e.code.b().unwrap().is_zero());
        }
        assert!(u.level_len(3) > 0);
    }

    #[test]
    fn horizon_is_enforced() {
        let mut u = Universe::build(cfg(2, 2)).unwrap();
        assert!(matches!(u.enumerate_level(3), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn element_cap_is_enforced() {
        let c = cfg(3, 3).with_max_elements(5);
        assert!(matches!(Universe::build(c), Err(Error::ElementCap(5))));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = Universe::build(cfg(3, 4)).unwrap();
        let b = Universe::build(cfg(3, 4)).unwrap();
        assert_eq!(a.dump(), b.dump());
    }
}
