use std::fmt::Write;

use super::{Code, Universe};
use crate::shift;

pub const HEADER: &str = "# id rank variant weight_idx age p_or_xi b_terms sigma fmap nil";

/// One line per element in id order. Unused fields print as `-`; `b_terms`
/// is `0` or a comma list of `id:num/den`; `fmap` is an id or `-` for the
/// undefined value; `nil` is the nilpotency index.
pub(super) fn dump(u: &Universe) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    for e in u.elements() {
        let (w, pxi, b) = match &e.code {
            Code::Base { index } => ("-".to_string(), format!("i{index}"), "-".to_string()),
            Code::Type1 { p, weight_idx, b } => (weight_idx.to_string(), format!("p{p}"), b.to_string()),
            Code::Type2 { xi, weight_idx, b } => (weight_idx.to_string(), format!("x{}", xi.0), b.to_string()),
        };
        let (fmap, nil) = if u.is_sealed(e.rank) {
            let f = u.f(e.id).map_or("-".to_string(), |t| t.0.to_string());
            (f, shift::nilpotency_index(u, e.id).to_string())
        } else {
            ("?".to_string(), "?".to_string())
        };
        writeln!(
            s,
            "{} {} {} {} {} {} {} {} {} {}",
            e.id.0,
            e.rank,
            e.code.tag(),
            w,
            e.age,
            pxi,
            b,
            e.sigma,
            fmap,
            nil
        )
        .unwrap();
    }
    s
}
