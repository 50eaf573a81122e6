use thiserror::Error;

use crate::gamma::{GammaId, Rank, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A candidate refers to an element that has not been interned yet, or
    /// that does not sit strictly below the candidate's rank.
    #[error("dangling reference to {id} from a rank-{rank} candidate")]
    Dangling { id: GammaId, rank: Rank },

    #[error("candidate is not admissible: {}", join(.0))]
    Inadmissible(Vec<Violation>),

    #[error("rank {requested} exceeds the configured horizon {horizon}")]
    HorizonExceeded { requested: Rank, horizon: Rank },

    #[error("universe would exceed the element cap of {0}")]
    ElementCap(usize),

    #[error("level {requested} cannot be opened; the next open rank is {next}")]
    LevelOrder { requested: Rank, next: Rank },

    #[error("rank {rank} has not been sealed yet")]
    Unsealed { rank: Rank },

    #[error("functional support reaches rank {rank}, beyond the vector horizon {horizon}")]
    BeyondHorizon { rank: Rank, horizon: Rank },

    /// A property the construction guarantees did not hold. This indicates a
    /// bug, never bad user input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("pair supplier exhausted: {0}")]
    SupplierExhausted(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
