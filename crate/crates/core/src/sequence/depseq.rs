use num_bigint::BigUint;
use serde::Serialize;

use super::check::{Check, Instance};
use super::pair::{check_exact_pair, ExactPairReport, PairKind};
use super::supply::{PairSupplier, SuppliedPair};
use super::RankRange;
use crate::config::Regime;
use crate::error::{Error, Result};
use crate::functional::Vector;
use crate::functional::{evaluation_analysis, AnalysisStep, EvaluationAnalysis};
use crate::gamma::{BFunctional, Candidate, GammaId, Rank, Universe};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepSeqParams {
    pub j0: usize,
    /// Requested length; capped by `n_{2j_0-1}` and by what the supplier
    /// and horizon allow.
    pub length: usize,
    pub delta: u8,
    pub weak: bool,
    /// Constant the pairs are checked against.
    pub c: Q,
    /// `j_1`; by default the least `j` with `m_{4j} > n_{2j_0-1}^2`, or 1
    /// when no configured weight satisfies it.
    pub j1: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DependentSequenceCertificate {
    pub j0: usize,
    pub odd_weight_idx: usize,
    pub regime: Regime,
    pub c: Q,
    pub delta: u8,
    pub weak: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Q>,
    pub length: usize,
    pub nominal_length: String,
    pub length_capped: bool,
    /// `p_0 = 0, p_1, …, p_a`.
    pub p_seq: Vec<Rank>,
    pub xi_chain: Vec<GammaId>,
    pub eta_seq: Vec<GammaId>,
    /// `j_1, σ(ξ_1), …, σ(ξ_{a-1})`; pair `i` has weight `m_{4 j_i}^{-1}`.
    pub j_seq: Vec<u64>,
    pub eta_weight_idx: Vec<usize>,
    pub ranges: Vec<Option<RankRange>>,
    pub pairs: Vec<SuppliedPair>,
    pub pair_reports: Vec<ExactPairReport>,
    /// Exact consequences of the construction.
    pub clauses: Vec<Check>,
    /// `m_{4 j_i} > n_{2j_0-1}^2` for every `i`.
    pub magnitude: Check,
    #[serde(skip)]
    pub xs: Vec<Vector>,
}

impl DependentSequenceCertificate {
    pub fn clause(&self, prefix: &str) -> Option<&Check> {
        self.clauses.iter().find(|c| c.name.starts_with(prefix))
    }

    pub fn identities_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }
}

fn choose_j1(u: &Universe, odd: usize) -> Result<usize> {
    let cfg = u.config();
    if cfg.weight_count() < 4 {
        return Err(Error::SupplierExhausted("no weight index of the form 4j is configured".into()));
    }
    Ok((1..=cfg.weight_count() / 4).find(|&j| cfg.odd_magnitude_holds(4 * j, odd)).unwrap_or(1))
}

/// Alternates supplier calls and chain growth:
/// `ξ_1 = (p_1, 0, m_{2j_0-1}^{-1}, e*_{η_1})`, then
/// `ξ_{i+1} = (p_{i+1}, ξ_i, m_{2j_0-1}^{-1}, e*_{η_{i+1}})` with
/// `weight η_{i+1} = m_{4σ(ξ_i)}^{-1}` and `p_i = max(rank η_i, max ran x_i) + 1`.
pub fn build_dependent_sequence(
    u: &mut Universe,
    supplier: &mut dyn PairSupplier,
    params: &DepSeqParams,
) -> Result<DependentSequenceCertificate> {
    let cfg = u.config();
    if params.j0 == 0 || 2 * params.j0 - 1 > cfg.weight_count() {
        return Err(Error::Precondition(format!("odd weight index 2j0-1 for j0 = {} is not configured", params.j0)));
    }
    if params.delta > 1 {
        return Err(Error::Precondition(format!("delta must be 0 or 1, got {}", params.delta)));
    }
    let odd = 2 * params.j0 - 1;
    let nominal: BigUint = cfg.n(odd).clone();
    let cap = cfg.age_cap(odd);
    let length = params.length.max(1).min(cap);
    let j1 = match params.j1 {
        Some(j) => j,
        None => choose_j1(u, odd)?,
    };

    let mut p_seq = vec![0];
    let mut xi_chain: Vec<GammaId> = Vec::new();
    let mut j_seq: Vec<u64> = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..length {
        let j = match xi_chain.last() {
            None => j1 as u64,
            Some(&xi) => u.sigma(xi),
        };
        let w = usize::try_from(4 * j).unwrap_or(usize::MAX);
        if w > u.config().weight_count() {
            return Err(Error::SupplierExhausted(format!(
                "pair {} needs weight index 4*{j} = {w}, beyond the {} configured weights",
                i + 1,
                u.config().weight_count()
            )));
        }
        let after = *p_seq.last().expect("p_0 is present");
        let pair = supplier.supply(u, w, after)?;
        let p = pair.top + 1;
        if p > u.config().horizon {
            return Err(Error::SupplierExhausted(format!(
                "p_{} = {p} exceeds the horizon {}",
                i + 1,
                u.config().horizon
            )));
        }
        let b = BFunctional::unit(pair.eta);
        let cand = match xi_chain.last() {
            None => Candidate::type1(p, 0, odd, b),
            Some(&xi) => Candidate::type2(p, xi, odd, b),
        };
        xi_chain.push(u.intern(cand)?);
        j_seq.push(j);
        p_seq.push(p);
        pairs.push(pair);
    }

    let top = *p_seq.last().expect("non-empty");
    u.seal_through(top)?;
    let h = u.sealed_rank();
    let xs = pairs.iter().map(|p| p.x.lift(u, h)).collect::<Result<Vec<_>>>()?;
    let eta_seq: Vec<GammaId> = pairs.iter().map(|p| p.eta).collect();
    let eta_weight_idx: Vec<usize> = eta_seq.iter().map(|&e| u.weight_idx(e).unwrap_or(0)).collect();
    let a = xi_chain.len();

    let mut ranges_ck = Check::identity("(1) ran x_i inside (p_{i-1}, p_i)");
    let mut eta_window = Check::identity("eta_i rank inside (p_{i-1}, p_i - 1]");
    let mut ranges = Vec::with_capacity(a);
    for (i, x) in xs.iter().enumerate() {
        let r = x.range(u);
        ranges.push(r.map(RankRange::from));
        let inside = r.is_none_or(|(lo, hi)| lo > p_seq[i] && hi < p_seq[i + 1]);
        ranges_ck.observe(Instance::fact(inside).index(i + 1));
        let er = u.rank(eta_seq[i]);
        eta_window.observe(Instance::fact(er > p_seq[i] && er < p_seq[i + 1]).at(eta_seq[i]).index(i + 1));
    }

    let xi = *xi_chain.last().expect("non-empty");
    let weight = Check::identity("(2) weight xi = 1/m_{2j0-1}")
        .with(Instance::eq(Q::from_int(u.weight_idx(xi).unwrap_or(0) as i64), Q::from_int(odd as i64)).at(xi));
    let want = EvaluationAnalysis {
        p0: 0,
        weight_idx: odd,
        steps: (0..a)
            .map(|i| AnalysisStep { p: p_seq[i + 1], b: BFunctional::unit(eta_seq[i]), xi: xi_chain[i] })
            .collect(),
    };
    let analysis = Check::identity("(2) analysis of xi is (p_i, e*_eta_i, xi_i)")
        .with(Instance::fact(evaluation_analysis(u, xi).as_ref() == Some(&want)).at(xi));

    let mut linkage = Check::identity("sigma linkage j_{i+1} = sigma(xi_i)");
    for i in 1..a {
        linkage.observe(
            Instance::eq(Q::from_int(j_seq[i] as i64), Q::from_int(u.sigma(xi_chain[i - 1]) as i64))
                .at(xi_chain[i - 1])
                .index(i + 1),
        );
    }
    let mut pair_weights = Check::identity("weight eta_i = 1/m_{4 j_i}");
    for i in 0..a {
        pair_weights.observe(
            Instance::eq(Q::from_int(eta_weight_idx[i] as i64), Q::from_int(4 * j_seq[i] as i64))
                .at(eta_seq[i])
                .index(i + 1),
        );
    }
    let mut admissible = Check::identity("xi_i admissible");
    for &x in &xi_chain {
        let ok = u.validate(&u.element(x).candidate())?.is_empty();
        admissible.observe(Instance::fact(ok).at(x));
    }
    let mut decreasing = Check::identity("eta weights strictly decrease");
    for i in 1..a {
        decreasing.observe(Instance::fact(eta_weight_idx[i] > eta_weight_idx[i - 1]).at(eta_seq[i]).index(i + 1));
    }

    let epsilon = params.weak.then(|| Q::from_biguint(&nominal).recip());
    let kind = match &epsilon {
        Some(e) => PairKind::Weak { delta: params.delta, epsilon: e.clone() },
        None => PairKind::Special { delta: params.delta },
    };
    let mut pair_reports = Vec::with_capacity(a);
    let mut pair_ids = Check::identity("(3)/(4) pair identities");
    for i in 0..a {
        let r = check_exact_pair(u, &xs[i], eta_seq[i], &params.c, eta_weight_idx[i], &kind)?;
        pair_ids.observe(Instance::fact(r.identities_hold()).at(eta_seq[i]).index(i + 1));
        pair_reports.push(r);
    }

    let cfg = u.config();
    let n2 = Q::from_biguint(&(&nominal * &nominal));
    let mut magnitude = Check::magnitude("m_{4 j_i} > n_{2j0-1}^2");
    for (i, &w) in eta_weight_idx.iter().enumerate() {
        if w >= 1 && w <= cfg.weight_count() {
            // Strict inequality expressed through the exact slack m - n^2 - 1 >= 0.
            magnitude.observe(Instance::ge(cfg.m_q(w), &n2 + &Q::one()).at(eta_seq[i]).index(i + 1));
        }
    }

    Ok(DependentSequenceCertificate {
        j0: params.j0,
        odd_weight_idx: odd,
        regime: cfg.regime,
        c: params.c.clone(),
        delta: params.delta,
        weak: params.weak,
        epsilon,
        length: a,
        length_capped: BigUint::from(a) < nominal,
        nominal_length: nominal.to_string(),
        p_seq,
        xi_chain,
        eta_seq,
        j_seq,
        eta_weight_idx,
        ranges,
        pairs,
        pair_reports,
        clauses: vec![ranges_ck, eta_window, weight, analysis, linkage, pair_weights, admissible, decreasing, pair_ids],
        magnitude,
        xs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstructionConfig, NetCaps};
    use crate::sequence::supply::{CarrierStrategy, ChainSupplier, ShiftedSupplier};

    fn micro(k: usize, len: usize, horizon: Rank) -> Universe {
        let c = ConstructionConfig::relaxed_powers(k, len, horizon, NetCaps::singletons()).unwrap();
        Universe::with_base(c).unwrap()
    }

    fn params(length: usize) -> DepSeqParams {
        DepSeqParams { j0: 1, length, delta: 0, weak: false, c: Q::from_int(48), j1: Some(1) }
    }

    #[test]
    fn length_one() {
        let mut u = micro(2, 8, 6);
        let mut s = ChainSupplier::new(1, CarrierStrategy::Explicit);
        let cert = build_dependent_sequence(&mut u, &mut s, &params(1)).unwrap();
        assert_eq!(cert.length, 1);
        assert_eq!(cert.eta_weight_idx, vec![4]);
        assert!(cert.identities_hold(), "{:#?}", cert.clauses);
    }

    #[test]
    fn length_two_links_through_sigma() {
        let mut u = micro(2, 160, 64);
        let mut s = ChainSupplier::new(1, CarrierStrategy::Explicit);
        let cert = build_dependent_sequence(&mut u, &mut s, &params(2)).unwrap();
        assert_eq!(cert.length, 2);
        assert_eq!(cert.j_seq[1], u.sigma(cert.xi_chain[0]));
        assert_eq!(cert.eta_weight_idx[1] as u64, 4 * u.sigma(cert.xi_chain[0]));
        assert!(cert.identities_hold(), "{:#?}", cert.clauses);
    }

    #[test]
    fn shifted_pairs_chain() {
        let mut u = micro(3, 160, 64);
        let mut s = ShiftedSupplier::new(1, 3);
        let mut p = params(2);
        p.weak = true;
        let cert = build_dependent_sequence(&mut u, &mut s, &p).unwrap();
        assert!(cert.identities_hold(), "{:#?}", cert.clauses);
        assert!(cert.pairs.iter().all(|p| p.shifted.as_ref().unwrap().x_at_eta == Q::one()));
    }

    #[test]
    fn exhausted_weights_are_reported() {
        let mut u = micro(2, 8, 12);
        let mut s = ChainSupplier::new(1, CarrierStrategy::Explicit);
        match build_dependent_sequence(&mut u, &mut s, &params(2)) {
            Err(Error::SupplierExhausted(msg)) => assert!(msg.contains("weight index")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
