use serde::Serialize;

use super::pair::{ExactPair, ExactPairBuilder};
use crate::error::{Error, Result};
use crate::functional::{d_vector, pairing, Vector};
use crate::gamma::{BFunctional, Candidate, GammaId, Rank, Universe};
use crate::rational::Q;
use crate::shift::{s_apply, s_apply_pow, s_star_pow};

/// A vector-element pair handed to the dependent-sequence builder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuppliedPair {
    #[serde(skip)]
    pub x: Vector,
    pub eta: GammaId,
    /// `max(rank η, max ran x)`.
    pub top: Rank,
    pub chain: Option<ExactPair>,
    pub shifted: Option<ShiftedOrigin>,
}

/// How a shifted pair `(Sx, η)` was found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftedOrigin {
    /// The element found by exhaustive search; `η = F^{m-1}(γ)`.
    pub gamma: GammaId,
    pub m: usize,
    /// `x(η)` for the unshifted weighted sum `x`.
    pub x_at_eta: Q,
    /// `min_i ‖S^{k-1} x_i‖` over the blocks.
    pub min_top_power_norm: Q,
    /// `max_i ‖S^m x_i‖` over the blocks.
    pub max_next_power_norm: Q,
}

/// Produces pairs on demand, growing the universe above `after`.
pub trait PairSupplier {
    /// A pair with `min ran x > after`, `rank η > after` and
    /// `weight η = m_{weight_idx}^{-1}`; `weight_idx` is even.
    fn supply(&mut self, u: &mut Universe, weight_idx: usize, after: Rank) -> Result<SuppliedPair>;
}

/// Where the blocks of a chain come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierStrategy {
    /// Interns `k + 1` hand-picked elements at each carrier rank; keeps σ small.
    Explicit,
    /// Enumerates the carrier level from the capped net and picks the first
    /// suitable elements in canonical order.
    Enumerated,
}

/// Carrier elements `(r, 0, m_2^{-1}, e*_t)` for every base index `t`
/// and `(r, 0, m_2^{-1}, -e*_0)`. `F` maps the `t`-th to the `(t-1)`-th,
/// so `S^l d_{γ_0} = d_{γ_l}`.
fn explicit_carriers(u: &mut Universe, r: Rank) -> Result<(Vec<GammaId>, GammaId)> {
    let bases = (0..u.k())
        .map(|t| {
            u.lookup(&Candidate::base(t))
                .ok_or_else(|| Error::Precondition(format!("base element {t} is not materialized")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gs = Vec::with_capacity(bases.len());
    for &base in &bases {
        gs.push(u.intern(Candidate::type1(r, 0, 2, BFunctional::unit(base)))?);
    }
    let theta = u.intern(Candidate::type1(r, 0, 2, BFunctional::single(bases[0], -Q::one())))?;
    u.seal_through(r)?;
    Ok((gs, theta))
}

/// Least carrier rank above `lo` that can still be opened and whose cut
/// `r + 1` admits weight index `w`.
fn next_rank(u: &Universe, lo: Rank, w: usize) -> Rank {
    (lo + 1).max(u.sealed_rank() + 1).max(2).max(w.saturating_sub(1))
}

fn check_room(u: &Universe, q: Rank) -> Result<()> {
    if q > u.config().horizon {
        return Err(Error::SupplierExhausted(format!("cut rank {q} exceeds the horizon {}", u.config().horizon)));
    }
    Ok(())
}

/// Builds `(z, η)` with `z = m_{2j} a^{-1} Σ x_k` from a chain of `length`
/// blocks, one carrier rank and one cut per block.
#[derive(Clone, Debug)]
pub struct ChainSupplier {
    pub length: usize,
    pub carriers: CarrierStrategy,
    /// Use `b_k = 0` throughout.
    pub zero_b: bool,
}

impl ChainSupplier {
    pub fn new(length: usize, carriers: CarrierStrategy) -> Self {
        ChainSupplier { length, carriers, zero_b: false }
    }

    pub fn with_zero_b(mut self) -> Self {
        self.zero_b = true;
        self
    }

    fn block(&self, u: &mut Universe, r: Rank) -> Result<(Vector, BFunctional)> {
        match self.carriers {
            CarrierStrategy::Explicit => {
                let (gs, theta) = explicit_carriers(u, r)?;
                let x = d_vector(u, gs[0], r)?;
                let b = if self.zero_b { BFunctional::zero() } else { BFunctional::unit(theta) };
                Ok((x, b))
            }
            CarrierStrategy::Enumerated => {
                u.seal_through(r - 1)?;
                let ids = u.enumerate_level(r)?;
                if ids.is_empty() {
                    return Err(Error::SupplierExhausted(format!("level {r} of the capped net is empty")));
                }
                let mut fallback = None;
                for &g in &ids {
                    let x = d_vector(u, g, r)?;
                    if self.zero_b {
                        return Ok((x, BFunctional::zero()));
                    }
                    for &t in &ids {
                        if orthogonal_to_orbit(u, t, &x)? {
                            return Ok((x, BFunctional::unit(t)));
                        }
                    }
                    fallback.get_or_insert(x);
                }
                Ok((fallback.expect("level is non-empty"), BFunctional::zero()))
            }
        }
    }

    /// Builds the chain pair directly.
    pub fn build(&self, u: &mut Universe, weight_idx: usize, after: Rank) -> Result<ExactPair> {
        if !weight_idx.is_multiple_of(2) {
            return Err(Error::Precondition(format!("chain weight index {weight_idx} is odd")));
        }
        let mut b = ExactPairBuilder::new(u, weight_idx / 2, after)?;
        while b.len() < self.length.max(1) && b.has_room(u) {
            let r = next_rank(u, b.last_cut(), weight_idx);
            check_room(u, r + 1)?;
            let (x, bf) = self.block(u, r)?;
            b.push(u, x, r + 1, bf)?;
        }
        b.finish(u)
    }
}

/// `⟨(S*)^l e*_t, x⟩ = 0` for every `l`.
fn orthogonal_to_orbit(u: &Universe, t: GammaId, x: &Vector) -> Result<bool> {
    let e = crate::functional::e_star(t);
    for l in 0..u.k() {
        if !pairing(u, &s_star_pow(u, &e, l), x)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

impl PairSupplier for ChainSupplier {
    fn supply(&mut self, u: &mut Universe, weight_idx: usize, after: Rank) -> Result<SuppliedPair> {
        let p = self.build(u, weight_idx, after)?;
        Ok(SuppliedPair { x: p.z.clone(), eta: p.eta, top: p.top(), chain: Some(p), shifted: None })
    }
}

/// Pairs `(Sx, η)` with `η = F^{m-1}(γ)`, where `x = m_{2j} a^{-1} Σ x_i`
/// and `γ` maximizes `S^{m-1} x(γ)` over the elements of the requested
/// weight at the top rank of the chain.
///
/// Blocks are `x_i = d_{γ_0}` on explicit carriers; a norming chain with
/// `b_i = e*_{γ_{m-1}}` is interned above each block so that a suitable
/// `γ` exists.
#[derive(Clone, Debug)]
pub struct ShiftedSupplier {
    pub length: usize,
    pub m: usize,
}

impl ShiftedSupplier {
    /// `m = k` is the top-power case: `F(η)` is then undefined.
    pub fn new(length: usize, m: usize) -> Self {
        ShiftedSupplier { length, m }
    }
}

impl PairSupplier for ShiftedSupplier {
    fn supply(&mut self, u: &mut Universe, weight_idx: usize, after: Rank) -> Result<SuppliedPair> {
        let k = u.k();
        if self.m == 0 || self.m > k {
            return Err(Error::Precondition(format!("shift power m = {} outside 1..={k}", self.m)));
        }
        if !weight_idx.is_multiple_of(2) || weight_idx > u.config().weight_count() {
            return Err(Error::Precondition(format!("weight index {weight_idx} is not an available even weight")));
        }
        let cap = u.config().age_cap(weight_idx);
        let mut blocks = Vec::new();
        let mut prev: Option<GammaId> = None;
        let mut cut = after;
        while blocks.len() < self.length.max(1) && blocks.len() < cap {
            let r = next_rank(u, cut, weight_idx);
            check_room(u, r + 1)?;
            let (gs, _) = explicit_carriers(u, r)?;
            blocks.push(d_vector(u, gs[0], r)?);
            let b = BFunctional::unit(gs[self.m - 1]);
            let cand = match prev {
                None => Candidate::type1(r + 1, after, weight_idx, b),
                Some(xi) => Candidate::type2(r + 1, xi, weight_idx, b),
            };
            prev = Some(u.intern(cand)?);
            cut = r + 1;
        }
        u.seal_through(cut)?;
        let h = u.sealed_rank();
        let scale = &u.config().m_q(weight_idx) * &Q::new(1, blocks.len() as i64);
        let mut x = Vector::zero(u, h)?;
        let mut top_norm: Option<Q> = None;
        let mut next_norm = Q::zero();
        for xb in &blocks {
            let xb = xb.lift(u, h)?;
            let t = s_apply_pow(u, &xb, k - 1)?.sup();
            top_norm = Some(top_norm.map_or(t.clone(), |v| v.min(t)));
            next_norm = next_norm.max(s_apply_pow(u, &xb, self.m)?.sup());
            x = x.plus(&xb);
        }
        let x = x.scaled(&scale);

        let mut best: Option<(Q, GammaId, GammaId)> = None;
        for g in u.level(cut) {
            if u.weight_idx(g) != Some(weight_idx) {
                continue;
            }
            let Some(eta) = u.f_iter(g, self.m - 1) else { continue };
            let v = x.at(eta).clone();
            if best.as_ref().is_none_or(|(bv, _, _)| &v > bv) {
                best = Some((v, g, eta));
            }
        }
        let Some((v, gamma, eta)) = best.filter(|(v, _, _)| !v.is_negative() && !v.is_zero()) else {
            return Err(Error::SupplierExhausted(format!(
                "no element of weight index {weight_idx} with S^{} x positive",
                self.m - 1
            )));
        };
        let sx = s_apply(u, &x)?;
        let top = u.rank(eta).max(sx.range(u).map_or(0, |r| r.1));
        Ok(SuppliedPair {
            x: sx,
            eta,
            top,
            chain: None,
            shifted: Some(ShiftedOrigin {
                gamma,
                m: self.m,
                x_at_eta: v,
                min_top_power_norm: top_norm.unwrap_or_default(),
                max_next_power_norm: next_norm,
            }),
        })
    }
}
