//! Batch front end for the bdlab verification suites.
//!
//! [`verify`] builds the capped universe of a configuration, runs the
//! selected suites and returns a [`VerificationReport`]; [`lab`] builds
//! exact pairs and dependent sequences on lazily grown universes. All
//! emitted numbers are exact rationals in `num/den` form.

pub mod lab;
pub mod report;
pub mod source;
pub mod suites;

pub use report::{Suite, SuiteReport, VerificationReport, SCHEMA_VERSION};
pub use source::load_config;
pub use suites::{verify, VerifyOptions};
