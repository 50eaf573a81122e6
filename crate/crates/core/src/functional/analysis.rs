use serde::Serialize;

use super::{d_star, e_star, project_star, Basis, Functional, Interval};
use crate::gamma::{BFunctional, Code, GammaId, Rank, Universe};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisStep {
    pub p: Rank,
    pub b: BFunctional,
    pub xi: GammaId,
}

/// The data `(p_0, (p_r, b_r, ξ_r))` obtained by unwinding the Type-2
/// chain of an element down to its age-1 root. `p_r = rank ξ_r`,
/// `ξ_a = γ`, and `b_r` is supported in ranks `(p_{r-1}, p_r - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvaluationAnalysis {
    pub p0: Rank,
    pub weight_idx: usize,
    pub steps: Vec<AnalysisStep>,
}

/// `None` for base elements.
pub fn evaluation_analysis(u: &Universe, gamma: GammaId) -> Option<EvaluationAnalysis> {
    let weight_idx = u.weight_idx(gamma)?;
    let mut steps = Vec::new();
    let mut cur = gamma;
    let p0 = loop {
        let e = u.element(cur);
        match &e.code {
            Code::Type1 { p, b, .. } => {
                steps.push(AnalysisStep { p: e.rank, b: b.clone(), xi: cur });
                break *p;
            }
            Code::Type2 { xi, b, .. } => {
                steps.push(AnalysisStep { p: e.rank, b: b.clone(), xi: cur });
                cur = *xi;
            }
            Code::Base { .. } => unreachable!("Type-2 predecessors carry a weight"),
        }
    };
    steps.reverse();
    Some(EvaluationAnalysis { p0, weight_idx, steps })
}

impl EvaluationAnalysis {
    pub fn age(&self) -> usize {
        self.steps.len()
    }

    pub fn target(&self) -> GammaId {
        self.steps.last().expect("analysis is non-empty").xi
    }

    /// `p_{r}`, with `p(0) = p_0`.
    pub fn p(&self, r: usize) -> Rank {
        if r == 0 {
            self.p0
        } else {
            self.steps[r - 1].p
        }
    }

    /// `Σ_{r>t} d*_{ξ_r} + β Σ_{r>t} P*_{(p_{r-1},∞)} b_r`, plus `e*_{ξ_t}`
    /// when `t ≥ 1`. `t = 0` is the full identity.
    pub fn partial(&self, u: &Universe, t: usize) -> Functional {
        self.assemble(u, t, |r| Interval::above(self.p(r - 1)))
    }

    pub fn full(&self, u: &Universe) -> Functional {
        self.partial(u, 0)
    }

    /// The full identity with windows `(p_{r-1}, p_r]` in place of
    /// `(p_{r-1}, ∞)`.
    pub fn windowed(&self, u: &Universe) -> Functional {
        self.assemble(u, 0, |r| Interval::new(self.p(r - 1), Some(self.p(r))))
    }

    fn assemble(&self, u: &Universe, t: usize, window: impl Fn(usize) -> Interval) -> Functional {
        let beta: Q = u.config().weight(self.weight_idx);
        let mut out = if t >= 1 { e_star(self.steps[t - 1].xi) } else { Functional::zero(Basis::EStar) };
        for r in t + 1..=self.age() {
            let step = &self.steps[r - 1];
            out.axpy(&Q::one(), &d_star(u, step.xi));
            let proj = project_star(u, &window(r), &step.b.to_functional());
            out.axpy(&beta, &proj);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstructionConfig, NetCaps};
    use crate::functional::c_star;
    use crate::gamma::Candidate;

    #[test]
    fn age_one_and_age_two_identities() {
        let c = ConstructionConfig::relaxed_powers(2, 4, 5, NetCaps::singletons()).unwrap();
        let mut u = Universe::with_base(c).unwrap();
        let g1 = u.intern(Candidate::type1(2, 0, 2, BFunctional::unit(GammaId(1)))).unwrap();
        let t = u.intern(Candidate::type1(3, 0, 2, BFunctional::unit(g1))).unwrap();
        let g2 = u.intern(Candidate::type2(4, g1, 2, BFunctional::single(t, -Q::one()))).unwrap();
        u.seal_through(4).unwrap();

        let a1 = evaluation_analysis(&u, g1).unwrap();
        assert_eq!(a1.p0, 0);
        assert_eq!(a1.steps, vec![AnalysisStep { p: 2, b: BFunctional::unit(GammaId(1)), xi: g1 }]);
        assert_eq!(a1.full(&u), e_star(g1));

        let a2 = evaluation_analysis(&u, g2).unwrap();
        assert_eq!(a2.age(), 2);
        assert_eq!(a2.steps[0].xi, g1);
        assert_eq!(a2.full(&u), e_star(g2));
        assert_eq!(a2.windowed(&u), e_star(g2));
        assert_eq!(a2.partial(&u, 1), e_star(g2));
        // Recursion oracle: e*_γ = d*_γ + c*_γ with c*_γ = e*_ξ + β P* b.
        let rec = d_star(&u, g2).plus(&c_star(&u, g2));
        assert_eq!(rec, e_star(g2));
        assert!(evaluation_analysis(&u, GammaId(0)).is_none());
    }
}
