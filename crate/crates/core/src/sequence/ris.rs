use serde::Serialize;

use super::BlockSequence;
use crate::gamma::{GammaId, Universe};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RisCertificate {
    pub c: Q,
    pub j_seq: Vec<usize>,
    /// The shifted sequence `(S x_k)` certifies with the same `C` and `j_seq`.
    pub shift_closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RisViolation {
    pub clause: &'static str,
    /// 1-based sequence position.
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GammaId>,
    pub value: Q,
    pub limit: Q,
}

/// The least admissible `j_seq`: `j_1 = 1`, `j_{k+1} = max(j_k + 1, max ran x_k + 1)`.
/// Coordinate decay only gets harder as `j_k` grows, so this choice
/// certifies whenever any choice does.
pub fn default_j_seq(seq: &BlockSequence) -> Vec<usize> {
    let mut out = Vec::with_capacity(seq.len());
    let mut j = 1;
    for k in 0..seq.len() {
        if k > 0 {
            let top = seq.ranges()[k - 1].map_or(0, |(_, hi)| hi);
            j = (j + 1).max(top + 1);
        }
        out.push(j);
    }
    out
}

/// The least `C` for which conditions (1) and (3) hold with `js`; condition
/// (2) does not involve `C`.
pub fn least_ris_constant(u: &Universe, seq: &BlockSequence, js: &[usize]) -> Q {
    let mut c = Q::zero();
    for (k, x) in seq.vectors().iter().enumerate() {
        c = c.max(x.sup());
        for (id, v) in x.iter() {
            match u.weight_idx(id) {
                Some(i) if i < js[k] => c = c.max(&v.abs() * &u.config().m_q(i)),
                _ => {}
            }
        }
    }
    c
}

/// Checks the three RIS conditions with constant `c` over the horizon of
/// `seq`, using `j_seq` or [`default_j_seq`]. On success, also checks
/// the shifted sequence with the same constants.
pub fn validate_ris(
    u: &Universe,
    seq: &BlockSequence,
    c: &Q,
    j_seq: Option<&[usize]>,
) -> Result<RisCertificate, Vec<RisViolation>> {
    let js = j_seq.map_or_else(|| default_j_seq(seq), <[usize]>::to_vec);
    let found = violations(u, seq, c, &js);
    if !found.is_empty() {
        return Err(found);
    }
    let shift_closed = match seq.shifted(u) {
        Ok(t) => violations(u, &t, c, &js).is_empty(),
        Err(_) => false,
    };
    Ok(RisCertificate { c: c.clone(), j_seq: js, shift_closed })
}

fn violations(u: &Universe, seq: &BlockSequence, c: &Q, js: &[usize]) -> Vec<RisViolation> {
    let mut out = Vec::new();
    if js.len() != seq.len() {
        out.push(RisViolation {
            clause: "j sequence length",
            k: js.len().min(seq.len()) + 1,
            witness: None,
            value: Q::from_int(js.len() as i64),
            limit: Q::from_int(seq.len() as i64),
        });
        return out;
    }
    for k in 1..js.len() {
        if js[k] <= js[k - 1] {
            out.push(RisViolation {
                clause: "increasing",
                k: k + 1,
                witness: None,
                value: Q::from_int(js[k] as i64),
                limit: Q::from_int(js[k - 1] as i64 + 1),
            });
        }
    }
    for (k, x) in seq.vectors().iter().enumerate() {
        let norm = x.sup();
        if &norm > c {
            out.push(RisViolation { clause: "(1) norm", k: k + 1, witness: None, value: norm, limit: c.clone() });
        }
        if k + 1 < js.len() {
            if let Some((_, hi)) = seq.ranges()[k] {
                if js[k + 1] <= hi {
                    out.push(RisViolation {
                        clause: "(2) j_{k+1} > max ran x_k",
                        k: k + 1,
                        witness: None,
                        value: Q::from_int(js[k + 1] as i64),
                        limit: Q::from_int(hi as i64 + 1),
                    });
                }
            }
        }
        for (id, v) in x.iter() {
            let Some(i) = u.weight_idx(id) else { continue };
            if i >= js[k] {
                continue;
            }
            let limit = c * &u.config().weight(i);
            let value = v.abs();
            if value > limit {
                out.push(RisViolation { clause: "(3) coordinate decay", k: k + 1, witness: Some(id), value, limit });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstructionConfig, NetCaps};
    use crate::functional::d_vector;

    fn universe() -> Universe {
        let c = ConstructionConfig::relaxed_powers(2, 4, 4, NetCaps::singletons()).unwrap();
        Universe::build(c).unwrap()
    }

    #[test]
    fn single_unit_vector_certifies() {
        let u = universe();
        let x = d_vector(&u, GammaId(0), 1).unwrap();
        let s = BlockSequence::new(&u, vec![x]).unwrap();
        let cert = validate_ris(&u, &s, &Q::from_int(1000), None).unwrap();
        assert_eq!(cert.j_seq, vec![1]);
        assert!(cert.shift_closed);
    }

    #[test]
    fn names_range_clause() {
        let u = universe();
        let a = d_vector(&u, GammaId(0), 1).unwrap();
        let b = d_vector(&u, u.level(3).next().unwrap(), 3).unwrap();
        let s = BlockSequence::new(&u, vec![a, b]).unwrap();
        let err = validate_ris(&u, &s, &Q::from_int(1000), Some(&[1, 1])).unwrap_err();
        assert!(err.iter().any(|v| v.clause == "(2) j_{k+1} > max ran x_k"));
        assert!(err.iter().any(|v| v.clause == "increasing"));
        assert!(validate_ris(&u, &s, &Q::from_int(1000), None).is_ok());
    }

    #[test]
    fn decay_clause_names_witness() {
        let u = universe();
        let g = u.level(3).next().unwrap();
        let x = d_vector(&u, g, 4).unwrap();
        let s = BlockSequence::new(&u, vec![x]).unwrap();
        // With j_1 large every weighted coordinate must be tiny.
        let err = validate_ris(&u, &s, &Q::one(), Some(&[5])).unwrap_err();
        assert!(err.iter().all(|v| v.clause == "(3) coordinate decay"));
        assert!(err.iter().all(|v| v.witness.is_some()));
        let c = least_ris_constant(&u, &s, &[5]);
        assert!(validate_ris(&u, &s, &c, Some(&[5])).is_ok());
        assert!(!err.is_empty());
    }
}
