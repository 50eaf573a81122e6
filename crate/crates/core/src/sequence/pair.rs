use serde::Serialize;

use super::check::{Check, Instance};
use super::RankRange;
use crate::error::{Error, Result};
use crate::functional::{evaluation_analysis, AnalysisStep, EvaluationAnalysis};
use crate::functional::{pairing, project_x, Interval, Vector};
use crate::gamma::{BFunctional, Candidate, GammaId, Rank, Universe};
use crate::rational::Q;
use crate::shift::{s_apply_pow, s_star_pow};

/// Which form of the exactness condition a pair is checked against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum PairKind {
    /// `x(η) = δ` and `S^l x(η) = 0` for `1 ≤ l ≤ k-1`.
    Special { delta: u8 },
    /// With `δ = 0`: `|S^l x(η)| ≤ Cε` for `0 ≤ l ≤ k-1`.
    /// With `δ = 1`: `x(η) = 1` and `|S^l x(η)| ≤ Cε` for `1 ≤ l ≤ k-1`.
    Weak { delta: u8, epsilon: Q },
}

impl PairKind {
    pub fn delta(&self) -> u8 {
        match self {
            PairKind::Special { delta } | PairKind::Weak { delta, .. } => *delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactPairReport {
    pub c: Q,
    pub j: usize,
    pub kind: PairKind,
    pub eta: GammaId,
    pub horizon: Rank,
    pub conditions: Vec<Check>,
    /// The `6C` tail estimates over `P_{(s,∞)} x`; never part of `passes`.
    pub tail_estimates: Check,
    pub passes: bool,
}

impl ExactPairReport {
    pub fn condition(&self, prefix: &str) -> Option<&Check> {
        self.conditions.iter().find(|c| c.name.starts_with(prefix))
    }

    /// Whether every identity-kind condition holds.
    pub fn identities_hold(&self) -> bool {
        self.conditions.iter().filter(|c| c.kind == super::CheckKind::Identity).all(|c| c.holds)
    }
}

/// `S^l x(η)`, that is `x(F^l η)` or zero when the iterate is undefined.
fn shifted_value(u: &Universe, x: &Vector, eta: GammaId, l: usize) -> Q {
    u.f_iter(eta, l).map_or_else(Q::zero, |t| x.at(t).clone())
}

/// Evaluates every condition for `(x, η)` to be a `(C, j, δ)` pair of the
/// given kind, exhaustively over the horizon of `x`.
pub fn check_exact_pair(
    u: &Universe,
    x: &Vector,
    eta: GammaId,
    c: &Q,
    j: usize,
    kind: &PairKind,
) -> Result<ExactPairReport> {
    let h = x.horizon();
    if u.rank(eta) > h {
        return Err(Error::BeyondHorizon { rank: u.rank(eta), horizon: h });
    }
    if kind.delta() > 1 {
        return Err(Error::Precondition(format!("delta must be 0 or 1, got {}", kind.delta())));
    }
    let cfg = u.config();
    let wj = cfg.weight(j);
    let cw = c * &wj;
    let k = u.k();

    let norm = Check::magnitude("(1) ||x|| <= C").with(Instance::le(x.sup(), c.clone()));

    let mut dcoords = Check::magnitude("(2) |<d*_xi, x>| <= C/m_j");
    let a = x.d_coords(u);
    for id in u.ids_upto(h) {
        let v = a.get(&id).map_or_else(Q::zero, Q::abs);
        dcoords.observe(Instance::le(v, cw.clone()).at(id));
    }

    let weight = Check::identity("(3) weight eta = 1/m_j")
        .with(Instance::eq(Q::from_int(u.weight_idx(eta).map_or(0, |w| w as i64)), Q::from_int(j as i64)).at(eta));

    let mut exact = Vec::new();
    match kind {
        PairKind::Special { delta } => {
            let mut ch = Check::identity("(4) x(eta) = delta, S^l x(eta) = 0");
            ch.observe(Instance::eq(x.at(eta).clone(), Q::from_int(*delta as i64)).at(eta).index(0));
            for l in 1..k {
                ch.observe(Instance::eq(shifted_value(u, x, eta, l), Q::zero()).at(eta).index(l));
            }
            exact.push(ch);
        }
        PairKind::Weak { delta: 0, epsilon } => {
            let bound = c * epsilon;
            let mut ch = Check::magnitude("(4') |S^l x(eta)| <= C eps");
            for l in 0..k {
                ch.observe(Instance::le(shifted_value(u, x, eta, l).abs(), bound.clone()).at(eta).index(l));
            }
            exact.push(ch);
        }
        PairKind::Weak { epsilon, .. } => {
            exact.push(Check::identity("(4'') x(eta) = 1").with(Instance::eq(x.at(eta).clone(), Q::one()).at(eta)));
            let bound = c * epsilon;
            let mut ch = Check::magnitude("(4'') |S^l x(eta)| <= C eps");
            for l in 1..k {
                ch.observe(Instance::le(shifted_value(u, x, eta, l).abs(), bound.clone()).at(eta).index(l));
            }
            exact.push(ch);
        }
    }

    let limit = |i: usize, scale: &Q| -> Q { scale * &cfg.weight(if i < j { i } else { j }) };
    let mut coords = Check::magnitude("(5) |x(eta')| <= C/m_min(i,j)");
    for (id, v) in x.iter() {
        let Some(i) = u.weight_idx(id) else { continue };
        if i != j {
            coords.observe(Instance::le(v.abs(), limit(i, c)).at(id));
        }
    }

    let six_c = c * &Q::from_int(6);
    let mut tail = Check::magnitude("tail |P_(s,inf) x (eta')| <= 6C/m_min(i,j)");
    for s in 0..h {
        let y = project_x(u, &Interval::above(s), x)?;
        for (id, v) in y.iter() {
            let Some(i) = u.weight_idx(id) else { continue };
            if i != j {
                tail.observe(Instance::le(v.abs(), limit(i, &six_c)).at(id).index(s));
            }
        }
    }

    let mut conditions = vec![norm, dcoords, weight];
    conditions.extend(exact);
    conditions.push(coords);
    let passes = conditions.iter().all(|c| c.holds);
    Ok(ExactPairReport {
        c: c.clone(),
        j,
        kind: kind.clone(),
        eta,
        horizon: h,
        conditions,
        tail_estimates: tail,
        passes,
    })
}

/// A block of an exact-pair chain: `x_k`, the cut `q_k` and the
/// functional `b_k`, with `ran x_k ⊆ (q_{k-1}, q_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Block {
    x: Vector,
    q: Rank,
    b: BFunctional,
}

/// A constructed `(z, η)` together with the chain `ζ_1, …, ζ_a` whose
/// last element is `η`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactPair {
    pub j: usize,
    pub weight_idx: usize,
    pub cuts: Vec<Rank>,
    pub bs: Vec<BFunctional>,
    pub chain: Vec<GammaId>,
    pub eta: GammaId,
    pub ranges: Vec<Option<RankRange>>,
    /// `m_{2j} / a` for the actual chain length `a`.
    pub scale: Q,
    /// `S^l z(η)` for `0 ≤ l ≤ k-1`; all zero.
    pub exactness: Vec<Q>,
    pub nominal_length: String,
    pub length_capped: bool,
    #[serde(skip)]
    pub z: Vector,
    #[serde(skip)]
    pub blocks: Vec<Vector>,
}

impl ExactPair {
    pub fn length(&self) -> usize {
        self.chain.len()
    }

    /// Rank of `η` or of the top block, whichever is larger.
    pub fn top(&self) -> Rank {
        *self.cuts.last().expect("chain is non-empty")
    }
}

/// Grows the chain `ζ_1 = (q_1, q_0, m_{2j}^{-1}, b_1)`,
/// `ζ_i = (q_i, ζ_{i-1}, m_{2j}^{-1}, b_i)` one block at a time.
#[derive(Clone, Debug)]
pub struct ExactPairBuilder {
    j: usize,
    q0: Rank,
    blocks: Vec<Block>,
    chain: Vec<GammaId>,
}

impl ExactPairBuilder {
    pub fn new(u: &Universe, j: usize, q0: Rank) -> Result<Self> {
        if j == 0 || 2 * j > u.config().weight_count() {
            return Err(Error::Precondition(format!(
                "weight index 2j = {} outside the configured 1..={}",
                2 * j,
                u.config().weight_count()
            )));
        }
        Ok(ExactPairBuilder { j, q0, blocks: Vec::new(), chain: Vec::new() })
    }

    pub fn weight_idx(&self) -> usize {
        2 * self.j
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// `q_{k}` of the last pushed block, `q_0` initially.
    pub fn last_cut(&self) -> Rank {
        self.blocks.last().map_or(self.q0, |b| b.q)
    }

    /// Whether the chain may grow by one more element under the age cap.
    pub fn has_room(&self, u: &Universe) -> bool {
        self.chain.len() < u.config().age_cap(self.weight_idx())
    }

    /// Checks `ran x ⊆ (q_{k-1}, q)` and `⟨b, S^l x⟩ = 0` for every `l`,
    /// then interns the next chain element at rank `q`.
    pub fn push(&mut self, u: &mut Universe, x: Vector, q: Rank, b: BFunctional) -> Result<GammaId> {
        let lo = self.last_cut();
        if q <= lo + 1 {
            return Err(Error::Precondition(format!("cut {q} leaves no room after cut {lo}")));
        }
        if !self.has_room(u) {
            return Err(Error::Precondition(format!(
                "chain length would exceed the age cap {}",
                u.config().age_cap(self.weight_idx())
            )));
        }
        u.seal_through(q - 1)?;
        let x = x.lift(u, q - 1)?;
        if let Some((a, z)) = x.range(u) {
            if a <= lo || z >= q {
                return Err(Error::Precondition(format!("ran x = [{a}, {z}] is not inside ({lo}, {q})")));
            }
        }
        let bf = b.to_functional();
        for l in 0..u.k() {
            let v = pairing(u, &s_star_pow(u, &bf, l), &x)?;
            if !v.is_zero() {
                return Err(Error::Precondition(format!("<(S*)^{l} b, x> = {v}, expected 0")));
            }
        }
        let w = self.weight_idx();
        let cand = match self.chain.last() {
            None => Candidate::type1(q, self.q0, w, b.clone()),
            Some(&prev) => Candidate::type2(q, prev, w, b.clone()),
        };
        let id = u.intern(cand)?;
        self.chain.push(id);
        self.blocks.push(Block { x, q, b });
        Ok(id)
    }

    /// Seals the chain's level and returns `z = m_{2j} a^{-1} Σ x_k` with
    /// `η = ζ_a`, after verifying exactness and the chain analysis.
    pub fn finish(self, u: &mut Universe) -> Result<ExactPair> {
        let Some(&eta) = self.chain.last() else {
            return Err(Error::Precondition("an exact pair needs at least one block".into()));
        };
        let top = self.last_cut();
        u.seal_through(top)?;
        let h = u.sealed_rank();
        let cfg = u.config();
        let w = self.weight_idx();
        let a = self.chain.len();
        let scale = &cfg.m_q(w) * &Q::new(1, a as i64);
        let nominal = cfg.n(w).clone();
        let mut z = Vector::zero(u, h)?;
        let mut blocks = Vec::with_capacity(a);
        for blk in &self.blocks {
            let x = blk.x.lift(u, h)?;
            z = z.plus(&x);
            blocks.push(x);
        }
        z = z.scaled(&scale);

        let mut exactness = Vec::with_capacity(u.k());
        for l in 0..u.k() {
            let v = s_apply_pow(u, &z, l)?.at(eta).clone();
            if !v.is_zero() {
                return Err(Error::Invariant(format!("S^{l} z(eta) = {v} for a constructed exact pair")));
            }
            exactness.push(v);
        }

        let want = EvaluationAnalysis {
            p0: self.q0,
            weight_idx: w,
            steps: self
                .blocks
                .iter()
                .zip(&self.chain)
                .map(|(blk, &xi)| AnalysisStep { p: blk.q, b: blk.b.clone(), xi })
                .collect(),
        };
        if evaluation_analysis(u, eta).as_ref() != Some(&want) {
            return Err(Error::Invariant(format!("analysis of {eta} differs from its chain data")));
        }

        let ranges = blocks.iter().map(|x| x.range(u).map(RankRange::from)).collect();
        Ok(ExactPair {
            j: self.j,
            weight_idx: w,
            cuts: std::iter::once(self.q0).chain(self.blocks.iter().map(|b| b.q)).collect(),
            bs: self.blocks.iter().map(|b| b.b.clone()).collect(),
            chain: self.chain,
            eta,
            ranges,
            scale,
            exactness,
            length_capped: num_bigint::BigUint::from(a) < nominal,
            nominal_length: nominal.to_string(),
            z,
            blocks,
        })
    }
}

/// Builds the pair from complete data: `qs = [q_0, …, q_a]`, one `x_k`
/// and one `b_k` per block.
///
/// Each `ζ_k` is interned at rank `q_k`, so every level `q_k` must either
/// still be unsealed or already hold `ζ_k`. Use [`ExactPairBuilder`] to
/// interleave block construction with chain growth.
pub fn build_exact_pair(
    u: &mut Universe,
    xs: &[Vector],
    qs: &[Rank],
    bs: &[BFunctional],
    j: usize,
) -> Result<ExactPair> {
    if qs.len() != xs.len() + 1 || bs.len() != xs.len() {
        return Err(Error::Precondition(format!(
            "expected {} cuts and {} functionals for {} blocks, got {} and {}",
            xs.len() + 1,
            xs.len(),
            xs.len(),
            qs.len(),
            bs.len()
        )));
    }
    let mut b = ExactPairBuilder::new(u, j, qs[0])?;
    for (k, x) in xs.iter().enumerate() {
        b.push(u, x.clone(), qs[k + 1], bs[k].clone())?;
    }
    b.finish(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstructionConfig, NetCaps};
    use crate::functional::{d_vector, e_star};

    fn micro(k: usize, horizon: Rank) -> Universe {
        let c = ConstructionConfig::relaxed_powers(k, 8, horizon, NetCaps::singletons()).unwrap();
        Universe::with_base(c).unwrap()
    }

    /// Carriers `(r, 0, m_2^{-1}, ±e*_t)` at rank `r`; returns `(γ_0, θ)`
    /// with `θ` outside the backward orbit of `γ_0`.
    fn carriers(u: &mut Universe, r: Rank) -> (GammaId, GammaId) {
        let mut g0 = None;
        for t in 0..u.k() {
            let id = u.intern(Candidate::type1(r, 0, 2, BFunctional::unit(GammaId(t as u32)))).unwrap();
            g0.get_or_insert(id);
        }
        let theta = u.intern(Candidate::type1(r, 0, 2, BFunctional::single(GammaId(0), -Q::one()))).unwrap();
        u.seal_through(r).unwrap();
        (g0.unwrap(), theta)
    }

    #[test]
    fn zero_vector_is_a_pair_for_any_c() {
        let mut u = micro(2, 3);
        let (g, _) = carriers(&mut u, 2);
        let x = Vector::zero(&u, 2).unwrap();
        let r = check_exact_pair(&u, &x, g, &Q::zero(), 2, &PairKind::Special { delta: 0 }).unwrap();
        assert!(r.passes, "{:?}", r.conditions);
    }

    #[test]
    fn unit_value_fails_delta_zero() {
        let mut u = micro(2, 3);
        let (g, _) = carriers(&mut u, 2);
        let x = d_vector(&u, g, 2).unwrap();
        let r = check_exact_pair(&u, &x, g, &Q::from_int(10), 2, &PairKind::Special { delta: 0 }).unwrap();
        assert!(!r.condition("(4)").unwrap().holds);
        let r1 = check_exact_pair(&u, &x, g, &Q::from_int(10), 2, &PairKind::Special { delta: 1 }).unwrap();
        assert!(r1.condition("(4)").unwrap().holds);
    }

    fn chain_of_two(u: &mut Universe, q0: Rank, nonzero_b: bool) -> ExactPair {
        let mut b = ExactPairBuilder::new(u, 1, q0).unwrap();
        for r in [2, 4] {
            let (g, t) = carriers(u, r);
            let x = d_vector(u, g, r).unwrap();
            let bf = if nonzero_b { BFunctional::unit(t) } else { BFunctional::zero() };
            b.push(u, x, r + 1, bf).unwrap();
        }
        b.finish(u).unwrap()
    }

    #[test]
    fn zero_b_chain() {
        let mut u = micro(2, 6);
        let p = chain_of_two(&mut u, 1, false);
        assert_eq!(p.length(), 2);
        assert_eq!(p.cuts, vec![1, 3, 5]);
        assert_eq!(u.rank(p.eta), 5);
        assert!(p.z.at(p.eta).is_zero());
        assert!(matches!(u.element(p.chain[0]).code, crate::gamma::Code::Type1 { .. }));
        assert!(matches!(u.element(p.chain[1]).code, crate::gamma::Code::Type2 { .. }));
    }

    #[test]
    fn two_block_chain_reconstructs_eta() {
        let mut u = micro(2, 6);
        let p = chain_of_two(&mut u, 0, true);
        // Oracle: the chain's analysis, assembled independently, is e*_η.
        let an = evaluation_analysis(&u, p.eta).unwrap();
        assert_eq!(an.p0, 0);
        assert_eq!(an.steps.iter().map(|s| s.p).collect::<Vec<_>>(), vec![3, 5]);
        assert_eq!(an.steps.iter().map(|s| s.b.clone()).collect::<Vec<_>>(), p.bs);
        assert_eq!(an.full(&u), e_star(p.eta));
        assert!(p.exactness.iter().all(Q::is_zero));
        let r = check_exact_pair(&u, &p.z, p.eta, &Q::from_int(16 * 3), 2, &PairKind::Special { delta: 0 }).unwrap();
        assert!(r.identities_hold());
        assert_eq!(r.condition("(3)").unwrap().instances, 1);
    }

    #[test]
    fn single_block_from_data() {
        let mut u = micro(2, 4);
        let (g, t) = carriers(&mut u, 2);
        let x = d_vector(&u, g, 2).unwrap();
        let p = build_exact_pair(&mut u, &[x], &[0, 3], &[BFunctional::unit(t)], 1).unwrap();
        assert_eq!(p.length(), 1);
        assert_eq!(p.scale, Q::from_int(8));
    }

    #[test]
    fn orthogonality_is_enforced() {
        let mut u = micro(2, 4);
        let (g1, _) = carriers(&mut u, 2);
        let x1 = d_vector(&u, g1, 2).unwrap();
        let err = build_exact_pair(&mut u, &[x1], &[0, 3], &[BFunctional::unit(g1)], 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn inadmissible_chain_names_clause() {
        let mut u = micro(2, 4);
        let (g1, _) = carriers(&mut u, 2);
        let x1 = d_vector(&u, g1, 2).unwrap();
        let b = BFunctional::single(GammaId(0), Q::from_int(2));
        let err = build_exact_pair(&mut u, &[x1], &[1, 3], &[b], 1).unwrap_err();
        match err {
            Error::Inadmissible(v) => assert!(v.iter().any(|x| x.clause() == "net membership")),
            other => panic!("unexpected {other}"),
        }
    }
}
