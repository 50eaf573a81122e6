use std::fmt::Write;
use std::str::FromStr;

use bdlab_core::config::ClauseCheck;
use bdlab_core::sequence::{Check, EstimateEntry, Status};
use bdlab_core::{ConstructionConfig, NetCaps, Rank, Regime, Universe};
use num_bigint::BigUint;
use serde::Serialize;

/// Bumped whenever a field of the JSON report changes meaning or shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Gamma,
    Functional,
    Shift,
    Sequence,
    Estimates,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Gamma, Suite::Functional, Suite::Shift, Suite::Sequence, Suite::Estimates];

    /// Identity suites decide the exit status.
    pub fn is_identity(self) -> bool {
        self != Suite::Estimates
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gamma => "gamma",
            Suite::Functional => "functional",
            Suite::Shift => "shift",
            Suite::Sequence => "sequence",
            Suite::Estimates => "estimates",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            format!("unknown suite {s:?}; expected one of gamma, functional, shift, sequence, estimates")
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub name: String,
    pub k: usize,
    pub horizon: Rank,
    pub regime: Regime,
    pub m_seq: Vec<String>,
    pub n_seq: Vec<String>,
    pub net_caps: NetCaps,
    pub max_elements: usize,
    pub clauses: Vec<ClauseCheck>,
}

impl From<&ConstructionConfig> for ConfigEcho {
    fn from(c: &ConstructionConfig) -> Self {
        ConfigEcho {
            name: c.name.clone(),
            k: c.k,
            horizon: c.horizon,
            regime: c.regime,
            m_seq: c.m_seq().iter().map(ToString::to_string).collect(),
            n_seq: c.n_seq().iter().map(exact_nat).collect(),
            net_caps: c.net_caps.clone(),
            max_elements: c.max_elements,
            clauses: c.growth_clauses(),
        }
    }
}

/// Powers of two beyond 64 bits print as `2^e`; everything else in decimal.
fn exact_nat(n: &BigUint) -> String {
    if n.bits() > 64 && n.count_ones() == 1 {
        format!("2^{}", n.bits() - 1)
    } else {
        n.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCount {
    pub rank: Rank,
    pub count: usize,
}

pub fn level_counts(u: &Universe) -> Vec<LevelCount> {
    (1..=u.sealed_rank()).map(|rank| LevelCount { rank, count: u.level_len(rank) }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub status: Status,
    #[serde(flatten)]
    pub check: Check,
    /// Set for estimate entries; `false` means the bound lost its derivation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses_verified: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    pub entries: Vec<Entry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl SuiteReport {
    pub fn new(suite: Suite) -> Self {
        SuiteReport { suite, status: Status::Pass, entries: Vec::new(), notes: Vec::new(), elapsed_ms: None }
    }

    pub fn push(&mut self, status: Status, check: Check, notes: Vec<String>) {
        self.status = self.status.worst(status);
        self.entries.push(Entry { status, check, hypotheses_verified: None, notes });
    }

    pub fn push_estimate(&mut self, name: String, e: &EstimateEntry) {
        let mut check = e.check.clone();
        check.name = name;
        self.status = self.status.worst(e.status);
        self.entries.push(Entry {
            status: e.status,
            check,
            hypotheses_verified: Some(e.hypotheses_verified),
            notes: e.notes.clone(),
        });
    }

    /// Records an identity check: a violation is a failure.
    pub fn identity(&mut self, check: Check) {
        let status = if check.holds { Status::Pass } else { Status::Fail };
        self.push(status, check, Vec::new());
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.check.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub seed: u64,
    pub elements: usize,
    pub levels: Vec<LevelCount>,
    /// Growth clauses that do not hold under the configured sequences.
    pub regime_notes: Vec<String>,
    pub net_notes: Vec<String>,
    pub suites: Vec<SuiteReport>,
    pub status: Status,
}

impl VerificationReport {
    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }

    pub fn identity_failure(&self) -> bool {
        self.suites.iter().any(|s| s.suite.is_identity() && s.status == Status::Fail)
    }

    /// 0 iff no identity suite failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.identity_failure())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        writeln!(s, "bdlab verification report (schema {})", self.schema_version).unwrap();
        writeln!(s, "config {}: k = {}, horizon {}, regime {}, seed {}", c.name, c.k, c.horizon, c.regime, self.seed)
            .unwrap();
        let levels: Vec<String> = self.levels.iter().map(|l| format!("{}:{}", l.rank, l.count)).collect();
        writeln!(s, "elements {} (levels {})", self.elements, levels.join(" ")).unwrap();
        for n in self.regime_notes.iter().chain(&self.net_notes) {
            writeln!(s, "note: {n}").unwrap();
        }
        for suite in &self.suites {
            write!(s, "\n[{}] {}", suite.status, suite.suite.name()).unwrap();
            if let Some(ms) = suite.elapsed_ms {
                write!(s, " ({ms} ms)").unwrap();
            }
            writeln!(s).unwrap();
            for n in &suite.notes {
                writeln!(s, "  note: {n}").unwrap();
            }
            for e in &suite.entries {
                writeln!(s, "  {:<4} {}", e.status.to_string(), e.check).unwrap();
                for n in &e.notes {
                    writeln!(s, "       note: {n}").unwrap();
                }
            }
        }
        writeln!(s, "\noverall {}", self.status).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
        assert!(!Suite::Estimates.is_identity());
    }

    #[test]
    fn identity_fail_sets_exit_code() {
        let mut shift = SuiteReport::new(Suite::Shift);
        shift.identity(Check::identity("x").with(bdlab_core::sequence::Instance::fact(false)));
        let mut est = SuiteReport::new(Suite::Estimates);
        est.push(Status::Fail, Check::magnitude("y"), Vec::new());
        let cfg = crate::source::load_config("desk-strict", None).unwrap();
        let mut r = VerificationReport {
            schema_version: SCHEMA_VERSION,
            config: (&cfg).into(),
            seed: 0,
            elements: 0,
            levels: Vec::new(),
            regime_notes: Vec::new(),
            net_notes: Vec::new(),
            suites: vec![est],
            status: Status::Fail,
        };
        assert_eq!(r.exit_code(), 0);
        r.suites.push(shift);
        assert_eq!(r.exit_code(), 1);
        assert!(r.to_text().contains("[FAIL] shift"));
    }

    #[test]
    fn large_powers_of_two_print_exactly() {
        assert_eq!(exact_nat(&BigUint::from(123u32)), "123");
        assert_eq!(exact_nat(&(BigUint::from(1u32) << 288)), "2^288");
        let odd = (BigUint::from(1u32) << 100) + 1u32;
        assert_eq!(exact_nat(&odd), odd.to_string());
    }
}
