use std::fmt;

use serde::Serialize;

use super::{BFunctional, Candidate, Code, GammaId, Rank, Universe};
use crate::error::{Error, Result};

/// A failed admissibility clause.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum Violation {
    BaseIndex { index: usize, k: usize },
    RankWindow { detail: String },
    WeightRange { weight_idx: usize, max: usize },
    WeightMismatch { xi_weight: Option<usize>, weight_idx: usize },
    AgeCap { age: usize, cap: usize },
    SupportWindow { eta: GammaId, eta_rank: Rank, lo: Rank, hi: Rank },
    NetMembership { detail: String },
    OddWeightForm { detail: String },
    OddWeightMagnitude { eta_weight: usize, odd_weight: usize },
    SigmaMembership { i: u64, xi: GammaId },
}

impl Violation {
    pub fn clause(&self) -> &'static str {
        match self {
            Violation::BaseIndex { .. } => "base index",
            Violation::RankWindow { .. } => "rank window",
            Violation::WeightRange { .. } => "weight range",
            Violation::WeightMismatch { .. } => "weight mismatch",
            Violation::AgeCap { .. } => "age cap",
            Violation::SupportWindow { .. } => "support window",
            Violation::NetMembership { .. } => "net membership",
            Violation::OddWeightForm { .. } => "odd-weight form",
            Violation::OddWeightMagnitude { .. } => "odd-weight magnitude",
            Violation::SigmaMembership { .. } => "Σ-membership",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.clause())?;
        match self {
            Violation::BaseIndex { index, k } => write!(f, "index {index} outside 0..{k}"),
            Violation::RankWindow { detail }
            | Violation::NetMembership { detail }
            | Violation::OddWeightForm { detail } => f.write_str(detail),
            Violation::WeightRange { weight_idx, max } => {
                write!(f, "weight index {weight_idx} outside 1..={max}")
            }
            Violation::WeightMismatch { xi_weight, weight_idx } => match xi_weight {
                Some(w) => write!(f, "predecessor has weight index {w}, element has {weight_idx}"),
                None => write!(f, "predecessor is a base element and carries no weight"),
            },
            Violation::AgeCap { age, cap } => write!(f, "age {age} exceeds cap {cap}"),
            Violation::SupportWindow { eta, eta_rank, lo, hi } => {
                write!(f, "{eta} has rank {eta_rank}, outside ({lo}, {hi}]")
            }
            Violation::OddWeightMagnitude { eta_weight, odd_weight } => {
                write!(f, "m_{eta_weight} does not exceed n_{odd_weight}^2")
            }
            Violation::SigmaMembership { i, xi } => write!(f, "{i} is not in Σ({xi})"),
        }
    }
}

pub(super) fn validate(u: &Universe, cand: &Candidate) -> Result<Vec<Violation>> {
    let cfg = u.config();
    let mut out = Vec::new();
    let rank = cand.rank;
    let dangling = |id: GammaId| Error::Dangling { id, rank };
    let known_below = |id: GammaId| -> Result<Rank> {
        match u.get(id) {
            Some(e) if e.rank < rank => Ok(e.rank),
            _ => Err(dangling(id)),
        }
    };

    let (weight_idx, b, lo) = match &cand.code {
        Code::Base { index } => {
            if rank != 1 {
                out.push(Violation::RankWindow { detail: format!("base element at rank {rank}") });
            }
            if *index >= cfg.k {
                out.push(Violation::BaseIndex { index: *index, k: cfg.k });
            }
            return Ok(out);
        }
        Code::Type1 { p, weight_idx, b } => {
            if rank < 2 || p + 1 >= rank {
                out.push(Violation::RankWindow { detail: format!("p = {p} requires rank > {}, got {rank}", p + 1) });
            }
            (*weight_idx, b, *p)
        }
        Code::Type2 { xi, weight_idx, b } => {
            let xr = known_below(*xi)?;
            let xe = u.element(*xi);
            if xr + 2 > rank {
                out.push(Violation::RankWindow {
                    detail: format!("predecessor rank {xr} requires rank >= {}, got {rank}", xr + 2),
                });
            }
            if xe.weight_idx() != Some(*weight_idx) {
                out.push(Violation::WeightMismatch { xi_weight: xe.weight_idx(), weight_idx: *weight_idx });
            }
            if (1..=cfg.weight_count()).contains(weight_idx) {
                let cap = cfg.age_cap(*weight_idx);
                if xe.age + 1 > cap {
                    out.push(Violation::AgeCap { age: xe.age + 1, cap });
                }
            }
            (*weight_idx, b, xr)
        }
    };

    let max_w = rank.min(cfg.weight_count());
    if weight_idx < 1 || weight_idx > max_w {
        out.push(Violation::WeightRange { weight_idx, max: max_w });
    }

    for (eta, _) in b.terms() {
        let er = known_below(*eta)?;
        if er <= lo {
            out.push(Violation::SupportWindow { eta: *eta, eta_rank: er, lo, hi: rank - 1 });
        }
    }
    net_membership(u, b, &mut out);

    if weight_idx % 2 == 1 {
        odd_weight(u, cand, weight_idx, b, &mut out)?;
    }
    Ok(out)
}

fn net_membership(u: &Universe, b: &BFunctional, out: &mut Vec<Violation>) {
    let caps = &u.config().net_caps;
    if b.terms().len() > caps.max_support {
        out.push(Violation::NetMembership {
            detail: format!("support size {} exceeds {}", b.terms().len(), caps.max_support),
        });
    }
    let norm = b.l1();
    if norm > crate::rational::Q::one() {
        out.push(Violation::NetMembership { detail: format!("l1 norm {norm} exceeds 1") });
    }
    for (eta, c) in b.terms() {
        if !c.denominator_divides(caps.denominator_bound) {
            out.push(Violation::NetMembership {
                detail: format!("coefficient {c} at {eta} has denominator not dividing {}", caps.denominator_bound),
            });
        }
    }
}

fn odd_weight(
    u: &Universe,
    cand: &Candidate,
    weight_idx: usize,
    b: &BFunctional,
    out: &mut Vec<Violation>,
) -> Result<()> {
    if b.is_zero() {
        return Ok(());
    }
    let Some(eta) = b.as_unit() else {
        out.push(Violation::OddWeightForm { detail: format!("b = [{b}] is neither 0 nor a unit e*_eta") });
        return Ok(());
    };
    let Some(ew) = u.weight_idx(eta) else {
        out.push(Violation::OddWeightForm { detail: format!("{eta} is a base element and carries no weight") });
        return Ok(());
    };
    if ew % 4 != 0 {
        out.push(Violation::OddWeightForm { detail: format!("{eta} has weight index {ew}, not a multiple of 4") });
        return Ok(());
    }
    let cfg = u.config();
    if cfg.is_strict() && weight_idx <= cfg.weight_count() && !cfg.odd_magnitude_holds(ew, weight_idx) {
        out.push(Violation::OddWeightMagnitude { eta_weight: ew, odd_weight: weight_idx });
    }
    if let Code::Type2 { xi, .. } = &cand.code {
        let i = (ew / 4) as u64;
        if !u.sigma_set(*xi)?.contains(&i) {
            out.push(Violation::SigmaMembership { i, xi: *xi });
        }
    }
    Ok(())
}
