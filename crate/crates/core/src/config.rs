//! Construction parameters and their validation.
//!
//! A config is a TOML document:
//!
//! ```toml
//! name = "desk-relaxed"
//! k = 3                       # nilpotency order, >= 2
//! horizon = 6                 # highest rank to materialize
//! regime = "relaxed"          # or "strict"
//! m_seq = [4, 16, 64, 256, 1024]
//! n_seq = [16, 18, 20, 22, 24]  # integers, decimal strings, or "a^b"
//! max_elements = 20000        # optional memory cap
//!
//! [net_caps]
//! max_support = 1             # 0 gives the empty net
//! denominator_bound = 1       # coefficient denominators must divide this
//! eta_pool = 3                # optional, see `NetCaps::eta_pool`
//! ```

use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::Rank;
use crate::rational::Q;

pub const DEFAULT_MAX_ELEMENTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Strict,
    Relaxed,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Strict => "strict",
            Regime::Relaxed => "relaxed",
        })
    }
}

/// Caps on the finite nets the `b` functionals are drawn from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetCaps {
    pub max_support: usize,
    pub denominator_bound: u64,
    /// When set, only the first `eta_pool` elements of each weight class
    /// of each level (in canonical order), closed under the shift map, may
    /// appear in the support of an enumerated `b` or serve as the
    /// predecessor of an enumerated Type-2 element. Level 1 always belongs
    /// to the pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_pool: Option<usize>,
}

impl NetCaps {
    pub fn singletons() -> Self {
        NetCaps { max_support: 1, denominator_bound: 1, eta_pool: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionConfig {
    pub name: String,
    pub k: usize,
    m_seq: Vec<BigUint>,
    n_seq: Vec<BigUint>,
    pub horizon: Rank,
    pub net_caps: NetCaps,
    pub regime: Regime,
    pub max_elements: usize,
    /// Growth clauses on (m, n) that fail; empty in the strict regime.
    relaxed_clauses: Vec<ClauseCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseCheck {
    pub clause: &'static str,
    /// 1-based index `j` the clause was evaluated at.
    pub index: usize,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    k: usize,
    m_seq: Vec<Nat>,
    n_seq: Vec<Nat>,
    horizon: Rank,
    net_caps: NetCaps,
    regime: Regime,
    #[serde(default)]
    max_elements: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Nat {
    Int(u64),
    Text(String),
}

fn parse_nat(n: &Nat) -> Result<BigUint> {
    match n {
        Nat::Int(v) => Ok(BigUint::from(*v)),
        Nat::Text(s) => {
            let s = s.trim();
            let bad = || Error::Config(format!("not a natural number: {s:?}"));
            if let Some((b, e)) = s.split_once('^') {
                let b: BigUint = b.trim().parse().map_err(|_| bad())?;
                let e: u32 = e.trim().parse().map_err(|_| bad())?;
                Ok(num_traits::pow(b, e as usize))
            } else {
                s.parse().map_err(|_| bad())
            }
        }
    }
}

impl ConstructionConfig {
    pub fn new(
        name: impl Into<String>,
        k: usize,
        m_seq: Vec<BigUint>,
        n_seq: Vec<BigUint>,
        horizon: Rank,
        net_caps: NetCaps,
        regime: Regime,
    ) -> Result<Self> {
        let mut cfg = ConstructionConfig {
            name: name.into(),
            k,
            m_seq,
            n_seq,
            horizon,
            net_caps,
            regime,
            max_elements: DEFAULT_MAX_ELEMENTS,
            relaxed_clauses: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A relaxed config with `m_j = 2^(j+1)` and `n_j = 2^(j+4)` for
    /// `j = 1..=len`; handy for hand-built micro universes.
    pub fn relaxed_powers(k: usize, len: usize, horizon: Rank, net_caps: NetCaps) -> Result<Self> {
        let m = (1..=len).map(|j| BigUint::one() << (j + 1)).collect();
        let n = (1..=len).map(|j| BigUint::one() << (j + 4)).collect();
        Self::new(format!("relaxed-powers-{len}"), k, m, n, horizon, net_caps, Regime::Relaxed)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let m_seq = raw.m_seq.iter().map(parse_nat).collect::<Result<Vec<_>>>()?;
        let n_seq = raw.n_seq.iter().map(parse_nat).collect::<Result<Vec<_>>>()?;
        let mut cfg = ConstructionConfig {
            name: raw.name.unwrap_or_else(|| "unnamed".to_string()),
            k: raw.k,
            m_seq,
            n_seq,
            horizon: raw.horizon,
            net_caps: raw.net_caps,
            regime: raw.regime,
            max_elements: raw.max_elements.unwrap_or(DEFAULT_MAX_ELEMENTS),
            relaxed_clauses: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn with_horizon(mut self, horizon: Rank) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_elements(mut self, cap: usize) -> Self {
        self.max_elements = cap;
        self
    }

    fn validate(&mut self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.horizon < 1 {
            return fail("horizon must be at least 1".into());
        }
        if self.m_seq.is_empty() {
            return fail("m_seq must not be empty".into());
        }
        if self.m_seq.len() != self.n_seq.len() {
            return fail(format!(
                "m_seq and n_seq must have equal length ({} vs {})",
                self.m_seq.len(),
                self.n_seq.len()
            ));
        }
        if self.net_caps.denominator_bound == 0 {
            return fail("net_caps.denominator_bound must be positive".into());
        }
        if self.net_caps.eta_pool == Some(0) {
            return fail("net_caps.eta_pool must be positive when set".into());
        }
        if self.m_seq[0] < BigUint::from(4u32) {
            return fail(format!("m_1 must be at least 4, got {}", self.m_seq[0]));
        }
        for (name, seq) in [("m_seq", &self.m_seq), ("n_seq", &self.n_seq)] {
            if seq.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("{name} must be strictly increasing"));
            }
        }
        let checks = self.growth_clauses();
        let failing: Vec<ClauseCheck> = checks.into_iter().filter(|c| !c.holds).collect();
        match self.regime {
            Regime::Strict if !failing.is_empty() => {
                let names: Vec<String> =
                    failing.iter().map(|c| format!("{} at j={}: {}", c.clause, c.index, c.detail)).collect();
                fail(format!("strict regime requires every growth clause: {}", names.join("; ")))
            }
            _ => {
                self.relaxed_clauses = failing;
                Ok(())
            }
        }
    }

    /// Evaluates the four growth conditions on (m_j, n_j) exactly.
    pub fn growth_clauses(&self) -> Vec<ClauseCheck> {
        let mut out = Vec::new();
        let m1 = &self.m_seq[0];
        out.push(ClauseCheck {
            clause: "m1_at_least_4",
            index: 1,
            holds: *m1 >= BigUint::from(4u32),
            detail: format!("m_1 = {m1}"),
        });
        for j in 1..self.m_seq.len() {
            let sq = &self.m_seq[j - 1] * &self.m_seq[j - 1];
            out.push(ClauseCheck {
                clause: "m_next_at_least_square",
                index: j,
                holds: self.m_seq[j] >= sq,
                detail: format!("m_{} vs m_{}^2", j + 1, j),
            });
        }
        let n1 = &self.n_seq[0];
        out.push(ClauseCheck {
            clause: "n1_at_least_m1_squared",
            index: 1,
            holds: *n1 >= m1 * m1,
            detail: format!("n_1 vs m_1^2 = {}", m1 * m1),
        });
        for j in 1..self.n_seq.len() {
            let base = BigUint::from(16u32) * &self.n_seq[j - 1];
            let verdict = at_least_pow_log2(&self.n_seq[j], &base, &self.m_seq[j]);
            out.push(ClauseCheck {
                clause: "n_next_at_least_16n_pow_log2_m",
                index: j,
                holds: verdict == Some(true),
                detail: match verdict {
                    Some(_) => format!("n_{} vs (16 n_{})^(log2 m_{})", j + 1, j, j + 1),
                    None => "undecided at refinement cap".into(),
                },
            });
        }
        out
    }

    /// Growth clauses that fail and were waived by the relaxed regime.
    pub fn relaxed_clauses(&self) -> &[ClauseCheck] {
        &self.relaxed_clauses
    }

    pub fn is_strict(&self) -> bool {
        self.regime == Regime::Strict
    }

    /// Number of available weights `m_1, ..., m_len`.
    pub fn weight_count(&self) -> usize {
        self.m_seq.len()
    }

    /// `m_j`, 1-based.
    pub fn m(&self, j: usize) -> &BigUint {
        &self.m_seq[j - 1]
    }

    /// `n_j`, 1-based.
    pub fn n(&self, j: usize) -> &BigUint {
        &self.n_seq[j - 1]
    }

    pub fn m_seq(&self) -> &[BigUint] {
        &self.m_seq
    }

    pub fn n_seq(&self) -> &[BigUint] {
        &self.n_seq
    }

    /// The weight `m_j^{-1}` as an exact rational.
    pub fn weight(&self, j: usize) -> Q {
        Q::from_biguint(self.m(j)).recip()
    }

    pub fn m_q(&self, j: usize) -> Q {
        Q::from_biguint(self.m(j))
    }

    pub fn n_q(&self, j: usize) -> Q {
        Q::from_biguint(self.n(j))
    }

    /// Age cap `n_j` as a machine integer, saturating.
    pub fn age_cap(&self, j: usize) -> usize {
        self.n(j).to_usize().unwrap_or(usize::MAX)
    }

    /// The constant `M = (1 - 2/m_1)^{-1}` bounding the projections.
    pub fn basis_constant(&self) -> Q {
        let theta = self.weight(1);
        (Q::one() - Q::from_int(2) * theta).recip()
    }

    /// `m_{4i} > n_{2j-1}^2`, required of an odd-weight `b = e*_eta` in the
    /// strict regime. `eta_weight` is the weight index `4i`,
    /// `odd_weight` is `2j - 1`.
    pub fn odd_magnitude_holds(&self, eta_weight: usize, odd_weight: usize) -> bool {
        let n = self.n(odd_weight);
        *self.m(eta_weight) > n * n
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            name: &'a str,
            k: usize,
            horizon: Rank,
            regime: Regime,
            m_seq: Vec<String>,
            n_seq: Vec<String>,
            max_elements: usize,
            net_caps: &'a NetCaps,
        }
        let out = Out {
            name: &self.name,
            k: self.k,
            horizon: self.horizon,
            regime: self.regime,
            m_seq: self.m_seq.iter().map(|x| x.to_string()).collect(),
            n_seq: self.n_seq.iter().map(|x| x.to_string()).collect(),
            max_elements: self.max_elements,
            net_caps: &self.net_caps,
        };
        toml::to_string(&out).expect("config serializes")
    }
}

/// Decides `n >= base^(log2 m)` exactly, or `None` when refinement up to
/// 64 binary digits of `log2 m` cannot separate the two sides.
pub fn at_least_pow_log2(n: &BigUint, base: &BigUint, m: &BigUint) -> Option<bool> {
    if base.is_zero() || m.is_zero() {
        return None;
    }
    if *base == BigUint::one() || *m == BigUint::one() {
        return Some(*n >= BigUint::one());
    }
    let bits = m.bits();
    if m.count_ones() == 1 {
        let e = (bits - 1) as usize;
        return Some(*n >= num_traits::pow(base.clone(), e));
    }
    // base^(log2 m) = m^(log2 base).
    if base.count_ones() == 1 {
        let e = (base.bits() - 1) as usize;
        return Some(*n >= num_traits::pow(m.clone(), e));
    }
    // For m not a power of two, t*log2(m) lies strictly in (lo, lo + 1).
    let mut t = 1usize;
    while t <= 64 {
        let lo = (num_traits::pow(m.clone(), t).bits() - 1) as usize;
        let lhs = num_traits::pow(n.clone(), t);
        if lhs >= num_traits::pow(base.clone(), lo + 1) {
            return Some(true);
        }
        if lhs <= num_traits::pow(base.clone(), lo) {
            return Some(false);
        }
        t *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn pow_log2_power_of_two_is_exact() {
        // (16 * 16)^(log2 16) = 256^4 = 2^32
        let n = BigUint::one() << 32;
        assert_eq!(at_least_pow_log2(&n, &big(256), &big(16)), Some(true));
        assert_eq!(at_least_pow_log2(&(n - 1u32), &big(256), &big(16)), Some(false));
    }

    #[test]
    fn pow_log2_general_m() {
        // 2^(log2 3) = 3
        assert_eq!(at_least_pow_log2(&big(3), &big(2), &big(3)), Some(true));
        assert_eq!(at_least_pow_log2(&big(2), &big(2), &big(3)), Some(false));
        // 4^(log2 3) = 9
        assert_eq!(at_least_pow_log2(&big(9), &big(4), &big(3)), Some(true));
        assert_eq!(at_least_pow_log2(&big(8), &big(4), &big(3)), Some(false));
    }

    #[test]
    fn strict_desk_sequences_are_accepted() {
        let text = r#"
            k = 2
            horizon = 4
            regime = "strict"
            m_seq = [4, 16, 256, 65536]
            n_seq = [16, "2^32", "2^288", "2^4672"]
            [net_caps]
            max_support = 1
            denominator_bound = 1
        "#;
        let cfg = ConstructionConfig::from_toml_str(text).unwrap();
        assert!(cfg.relaxed_clauses().is_empty());
        assert_eq!(cfg.basis_constant(), Q::from_int(2));
    }

    #[test]
    fn strict_rejects_slow_growth_relaxed_records_it() {
        let body = r#"
            k = 3
            horizon = 3
            m_seq = [4, 16, 64]
            n_seq = [16, 18, 20]
            [net_caps]
            max_support = 1
            denominator_bound = 1
        "#;
        let strict = format!("regime = \"strict\"\n{body}");
        assert!(matches!(ConstructionConfig::from_toml_str(&strict), Err(Error::Config(_))));
        let relaxed = format!("regime = \"relaxed\"\n{body}");
        let cfg = ConstructionConfig::from_toml_str(&relaxed).unwrap();
        let failing: Vec<_> = cfg.relaxed_clauses().iter().map(|c| (c.clause, c.index)).collect();
        assert!(failing.contains(&("m_next_at_least_square", 2)));
        assert!(failing.contains(&("n_next_at_least_16n_pow_log2_m", 1)));
    }

    #[test]
    fn structural_requirements_hold_in_both_regimes() {
        let mk = |m: &str, n: &str| {
            let text = format!(
                "k = 2\nhorizon = 2\nregime = \"relaxed\"\nm_seq = {m}\nn_seq = {n}\n\
                 [net_caps]\nmax_support = 1\ndenominator_bound = 1\n"
            );
            ConstructionConfig::from_toml_str(&text)
        };
        assert!(mk("[3, 16]", "[16, 17]").is_err());
        assert!(mk("[4, 4]", "[16, 17]").is_err());
        assert!(mk("[4, 8]", "[17, 16]").is_err());
        assert!(mk("[4, 8]", "[16]").is_err());
        assert!(mk("[4, 8]", "[16, 17]").is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "k = 2\nhorizon = 2\nregime = \"relaxed\"\nm_seq = [4]\nn_seq = [16]\nbogus = 1\n\
                    [net_caps]\nmax_support = 1\ndenominator_bound = 1\n";
        assert!(ConstructionConfig::from_toml_str(text).is_err());
    }
}
