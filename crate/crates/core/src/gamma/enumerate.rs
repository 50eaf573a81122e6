use super::{BFunctional, Candidate, GammaId, Rank, Universe};
use crate::error::Result;
use crate::rational::Q;

/// Every candidate of rank `rank` whose constituents lie in the pools of
/// the sealed lower levels and whose `b` lies in the capped net.
///
/// Even Type-1 elements with `b = 0` are admissible but are not part of
/// the net; their shift image is always undefined.
pub(super) fn candidates(u: &Universe, rank: Rank) -> Result<Vec<Candidate>> {
    if rank == 1 {
        return Ok((0..u.k()).map(Candidate::base).collect());
    }
    let cfg = u.config();
    let caps = &cfg.net_caps;
    let max_w = rank.min(cfg.weight_count());
    let pooled =
        |lo: Rank| -> Vec<GammaId> { (lo + 1..rank).flat_map(|r| u.level(r)).filter(|&id| u.in_pool(id)).collect() };
    // η eligible for odd-weight b: weight index a multiple of 4.
    let odd_etas = |lo: Rank, odd_w: usize| -> Vec<(GammaId, usize)> {
        pooled(lo)
            .into_iter()
            .filter_map(|id| u.weight_idx(id).filter(|w| w % 4 == 0).map(|w| (id, w)))
            .filter(|&(_, w)| caps.max_support >= 1 && (!cfg.is_strict() || cfg.odd_magnitude_holds(w, odd_w)))
            .collect()
    };

    let mut out = Vec::new();
    for p in 0..rank - 1 {
        let window = pooled(p);
        let nets = net(&window, caps.max_support, caps.denominator_bound);
        for w in 1..=max_w {
            if w % 2 == 0 {
                for b in &nets {
                    out.push(Candidate::type1(rank, p, w, b.clone()));
                }
            } else {
                out.push(Candidate::type1(rank, p, w, BFunctional::zero()));
                for (eta, _) in odd_etas(p, w) {
                    out.push(Candidate::type1(rank, p, w, BFunctional::unit(eta)));
                }
            }
        }
    }

    for xr in 1..rank.saturating_sub(1) {
        let window = pooled(xr);
        let nets = net(&window, caps.max_support, caps.denominator_bound);
        for xi in u.level(xr).filter(|&id| u.in_pool(id)) {
            let xe = u.element(xi);
            let Some(w) = xe.weight_idx() else { continue };
            if xe.age + 1 > cfg.age_cap(w) {
                continue;
            }
            out.push(Candidate::type2(rank, xi, w, BFunctional::zero()));
            if w % 2 == 0 {
                for b in &nets {
                    out.push(Candidate::type2(rank, xi, w, b.clone()));
                }
            } else {
                let sigma = u.sigma_set(xi)?;
                for (eta, ew) in odd_etas(xr, w) {
                    if sigma.contains(&((ew / 4) as u64)) {
                        out.push(Candidate::type2(rank, xi, w, BFunctional::unit(eta)));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Nonzero combinations over `window` with at most `max_support` terms,
/// coefficients `c / denominator` and `Σ |c| <= denominator`.
fn net(window: &[GammaId], max_support: usize, denominator: u64) -> Vec<BFunctional> {
    let mut out = Vec::new();
    let mut chosen: Vec<(GammaId, i64)> = Vec::new();
    let d = denominator as i64;
    fn rec(
        window: &[GammaId],
        start: usize,
        budget: i64,
        left: usize,
        d: i64,
        chosen: &mut Vec<(GammaId, i64)>,
        out: &mut Vec<BFunctional>,
    ) {
        if !chosen.is_empty() {
            out.push(BFunctional::new(chosen.iter().map(|&(id, c)| (id, Q::new(c, d)))));
        }
        if left == 0 {
            return;
        }
        for i in start..window.len() {
            for mag in 1..=budget {
                for c in [mag, -mag] {
                    chosen.push((window[i], c));
                    rec(window, i + 1, budget - mag, left - 1, d, chosen, out);
                    chosen.pop();
                }
            }
        }
    }
    rec(window, 0, d, max_support, d, &mut chosen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_net_is_plus_minus_units() {
        let w = [GammaId(0), GammaId(1)];
        let n = net(&w, 1, 1);
        assert_eq!(n.len(), 4);
        assert!(n.iter().all(|b| b.terms().len() == 1 && b.l1() == Q::one()));
    }

    #[test]
    fn net_respects_norm_and_denominator() {
        let w = [GammaId(0), GammaId(1)];
        let n = net(&w, 2, 2);
        // supports {0}, {1}: coefficients ±1/2, ±1; support {0,1}: (±1/2, ±1/2)
        assert_eq!(n.len(), 4 + 4 + 4);
        for b in &n {
            assert!(b.l1() <= Q::one());
            assert!(b.terms().iter().all(|(_, c)| c.denominator_divides(2)));
        }
        let mut sorted = n.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), n.len());
    }

    #[test]
    fn empty_support_cap_is_empty_net() {
        assert!(net(&[GammaId(0)], 0, 1).is_empty());
    }
}
