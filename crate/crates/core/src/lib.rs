//! Exact-rational laboratory for coded Bourgain–Delbaen index sets.
//!
//! The crate materializes finite truncations of the index set Γ, the
//! dual-basis functionals `d*_γ`, their biorthogonal vectors `d_γ`, and
//! the nilpotent shift `S`, and builds the exact pairs and dependent
//! sequences used to probe the operator algebra. Every scalar is a
//! [`Q`]; nothing is ever rounded.

pub mod config;
pub mod error;
pub mod functional;
pub mod gamma;
pub mod rational;
pub mod sequence;
pub mod shift;

pub use config::{ConstructionConfig, NetCaps, Regime};
pub use error::{Error, Result};
pub use functional::{Basis, Functional, Interval, Vector};
pub use gamma::{BFunctional, Candidate, Code, Element, GammaId, Rank, Universe, Violation};
pub use rational::Q;
