//! Block sequences, exact pairs, dependent sequences and the numeric
//! estimates attached to them.
//!
//! Every check is evaluated exhaustively over the materialized part of Γ
//! and reported with exact margins. Norms are truncated: `‖x‖` is the
//! supremum of `|x(γ)|` over the horizon of `x`.

mod check;
mod depseq;
mod estimates;
mod pair;
mod ris;
mod supply;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::Vector;
use crate::gamma::{Rank, Universe};
use crate::rational::Q;
use crate::shift::s_apply;
use std::ops::Range;

pub use check::{Check, CheckKind, Instance, Relation, Status};
pub use depseq::{build_dependent_sequence, DepSeqParams, DependentSequenceCertificate};
pub use estimates::{evaluate_estimates, lower_estimate_search, EstimateEntry, EstimateInput, EstimateReport};
pub use pair::{build_exact_pair, check_exact_pair, ExactPair, ExactPairBuilder, ExactPairReport, PairKind};
pub use ris::{default_j_seq, least_ris_constant, validate_ris, RisCertificate, RisViolation};
pub use supply::{CarrierStrategy, ChainSupplier, PairSupplier, ShiftedSupplier, SuppliedPair};

/// Vectors on a common horizon with their d-ranges.
///
/// Nonzero members are successive: `max ran x_k < min ran x_l` for
/// `k < l`. Zero members have no range and impose no order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSequence {
    vectors: Vec<Vector>,
    ranges: Vec<Option<(Rank, Rank)>>,
}

impl BlockSequence {
    /// Lifts every vector to the largest horizon present.
    pub fn new(u: &Universe, vectors: Vec<Vector>) -> Result<Self> {
        let horizon = vectors.iter().map(Vector::horizon).max().unwrap_or(1);
        let vectors = vectors.into_iter().map(|x| x.lift(u, horizon)).collect::<Result<Vec<_>>>()?;
        let ranges: Vec<_> = vectors.iter().map(|x| x.range(u)).collect();
        let mut last: Option<Rank> = None;
        for (i, r) in ranges.iter().enumerate() {
            if let Some((lo, hi)) = *r {
                if last.is_some_and(|m| lo <= m) {
                    return Err(Error::Precondition(format!(
                        "member {} starts at rank {lo}, not after the previous block",
                        i + 1
                    )));
                }
                last = Some(hi);
            }
        }
        Ok(BlockSequence { vectors, ranges })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn ranges(&self) -> &[Option<(Rank, Rank)>] {
        &self.ranges
    }

    pub fn horizon(&self) -> Rank {
        self.vectors.first().map_or(1, Vector::horizon)
    }

    /// Whether a rank gap separates every pair of consecutive nonzero
    /// members.
    pub fn is_skipped(&self) -> bool {
        let nonzero: Vec<_> = self.ranges.iter().flatten().collect();
        nonzero.windows(2).all(|w| w[0].1 + 1 < w[1].0)
    }

    /// `(S x_k)`; ranges can only shrink.
    pub fn shifted(&self, u: &Universe) -> Result<Self> {
        let vs = self.vectors.iter().map(|x| s_apply(u, x)).collect::<Result<Vec<_>>>()?;
        BlockSequence::new(u, vs)
    }

    /// Sum of `λ_k x_k` over `k` in the 0-based half-open `span`.
    pub fn weighted_sum(&self, u: &Universe, lambdas: &[Q], span: Range<usize>) -> Result<Vector> {
        let mut out = Vector::zero(u, self.horizon())?;
        for k in span {
            out = out.plus(&self.vectors[k].scaled(&lambdas[k]));
        }
        Ok(out)
    }
}

/// A rank interval reported as `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankRange {
    pub lo: Rank,
    pub hi: Rank,
}

impl From<(Rank, Rank)> for RankRange {
    fn from((lo, hi): (Rank, Rank)) -> Self {
        RankRange { lo, hi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstructionConfig, NetCaps};
    use crate::functional::d_vector;
    use crate::gamma::GammaId;

    fn universe() -> Universe {
        let c = ConstructionConfig::relaxed_powers(2, 4, 4, NetCaps::singletons()).unwrap();
        Universe::build(c).unwrap()
    }

    #[test]
    fn ranges_and_gaps() {
        let u = universe();
        let a = d_vector(&u, GammaId(0), 1).unwrap();
        let top = u.level(3).next().unwrap();
        let b = d_vector(&u, top, 3).unwrap();
        let s = BlockSequence::new(&u, vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(s.ranges(), &[Some((1, 1)), Some((3, 3))]);
        assert!(s.is_skipped());
        assert_eq!(s.horizon(), 3);
        assert!(BlockSequence::new(&u, vec![b, a]).is_err());
    }

    #[test]
    fn shift_keeps_ranges_inside() {
        let u = universe();
        let xs: Vec<_> = u.level(2).take(3).map(|id| d_vector(&u, id, 2).unwrap()).collect();
        let sum = xs.iter().skip(1).fold(xs[0].clone(), |a, b| a.plus(b));
        let s = BlockSequence::new(&u, vec![sum]).unwrap();
        let t = s.shifted(&u).unwrap();
        if let (Some(r), Some(q)) = (s.ranges()[0], t.ranges()[0]) {
            assert!(r.0 <= q.0 && q.1 <= r.1);
        }
    }
}
