use std::fmt;

use serde::Serialize;

use crate::config::Regime;
use crate::gamma::GammaId;
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

/// Identity checks are exact consequences of the construction; magnitude
/// checks compare against bounds that depend on the growth conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Identity,
    Magnitude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// One evaluated instance. `slack` is nonnegative exactly when the
/// relation holds (zero for a satisfied equality).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Instance {
    pub value: Q,
    pub relation: Relation,
    pub limit: Q,
    pub slack: Q,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GammaId>,
    /// 1-based inclusive subinterval of sequence indices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(usize, usize)>,
    /// Auxiliary index: a sequence position, a power of S, or a cut rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl Instance {
    fn with(value: Q, relation: Relation, limit: Q) -> Self {
        let slack = match relation {
            Relation::Le => &limit - &value,
            Relation::Ge => &value - &limit,
            Relation::Eq => -(&value - &limit).abs(),
        };
        Instance { value, relation, limit, slack, witness: None, interval: None, index: None }
    }

    pub fn le(value: Q, limit: Q) -> Self {
        Self::with(value, Relation::Le, limit)
    }

    pub fn ge(value: Q, limit: Q) -> Self {
        Self::with(value, Relation::Ge, limit)
    }

    pub fn eq(value: Q, expected: Q) -> Self {
        Self::with(value, Relation::Eq, expected)
    }

    /// A boolean fact, encoded as `[fact] == 1`.
    pub fn fact(holds: bool) -> Self {
        Self::eq(if holds { Q::one() } else { Q::zero() }, Q::one())
    }

    pub fn at(mut self, id: GammaId) -> Self {
        self.witness = Some(id);
        self
    }

    pub fn over(mut self, lo: usize, hi: usize) -> Self {
        self.interval = Some((lo, hi));
        self
    }

    pub fn index(mut self, i: usize) -> Self {
        self.index = Some(i);
        self
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Eq => self.slack.is_zero(),
            _ => !self.slack.is_negative(),
        }
    }
}

/// A named condition evaluated over many instances; keeps the instance
/// of least slack, preferring the earliest on ties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub holds: bool,
    pub instances: usize,
    pub violations: usize,
    pub worst: Option<Instance>,
}

impl Check {
    pub fn new(name: impl Into<String>, kind: CheckKind) -> Self {
        Check { name: name.into(), kind, holds: true, instances: 0, violations: 0, worst: None }
    }

    pub fn identity(name: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Identity)
    }

    pub fn magnitude(name: impl Into<String>) -> Self {
        Self::new(name, CheckKind::Magnitude)
    }

    pub fn observe(&mut self, inst: Instance) {
        self.instances += 1;
        if !inst.holds() {
            self.holds = false;
            self.violations += 1;
        }
        if self.worst.as_ref().is_none_or(|w| inst.slack < w.slack) {
            self.worst = Some(inst);
        }
    }

    pub fn with(mut self, inst: Instance) -> Self {
        self.observe(inst);
        self
    }

    /// `Pass` when the check holds. A failed identity is always `Fail`; a
    /// failed magnitude check is `Fail` only in the strict regime with
    /// its hypotheses verified, and `Warn` otherwise.
    pub fn status(&self, regime: Regime, hypotheses_verified: bool) -> Status {
        match (self.holds, self.kind) {
            (true, _) => Status::Pass,
            (false, CheckKind::Identity) => Status::Fail,
            (false, CheckKind::Magnitude) if regime == Regime::Strict && hypotheses_verified => Status::Fail,
            (false, CheckKind::Magnitude) => Status::Warn,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} instances, {} violations)",
            self.name,
            if self.holds { "holds" } else { "violated" },
            self.instances,
            self.violations
        )?;
        if let Some(w) = &self.worst {
            let rel = match w.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "==",
            };
            write!(f, "; tightest {} {} {}, slack {}", w.value, rel, w.limit, w.slack)?;
            if let Some(id) = w.witness {
                write!(f, " at {id}")?;
            }
            if let Some((lo, hi)) = w.interval {
                write!(f, " on [{lo}, {hi}]")?;
            }
            if let Some(i) = w.index {
                write!(f, " index {i}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_tightest_instance() {
        let mut c = Check::magnitude("bound");
        c.observe(Instance::le(Q::new(1, 2), Q::one()).at(GammaId(3)));
        c.observe(Instance::le(Q::new(3, 4), Q::one()).at(GammaId(5)));
        assert!(c.holds);
        assert_eq!(c.worst.as_ref().unwrap().witness, Some(GammaId(5)));
        assert_eq!(c.worst.as_ref().unwrap().slack, Q::new(1, 4));
        c.observe(Instance::le(Q::from_int(2), Q::one()));
        assert!(!c.holds);
        assert_eq!(c.violations, 1);
        assert_eq!(c.status(Regime::Relaxed, true), Status::Warn);
        assert_eq!(c.status(Regime::Strict, true), Status::Fail);
        assert_eq!(c.status(Regime::Strict, false), Status::Warn);
    }

    #[test]
    fn equality_and_lower_bounds() {
        assert!(Instance::eq(Q::zero(), Q::zero()).holds());
        assert!(!Instance::eq(Q::new(1, 3), Q::zero()).holds());
        assert_eq!(Instance::eq(Q::new(-1, 3), Q::zero()).slack, Q::new(-1, 3));
        assert!(Instance::ge(Q::one(), Q::new(1, 2)).holds());
        assert!(!Instance::fact(false).holds());
        let mut c = Check::identity("x");
        c.observe(Instance::fact(false));
        assert_eq!(c.status(Regime::Relaxed, false), Status::Fail);
    }
}
