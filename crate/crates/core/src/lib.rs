//! Exact model counting for pseudo-Boolean formulas.
//!
//! The counter runs a top-down search over the formula's variables with
//! component decomposition, component caching and cutting-planes conflict
//! learning. See [`counter::count_pbmc`] for the entry point.

pub mod components;
pub mod counter;
pub mod engine;
pub mod formula;
pub mod generators;
pub mod oracle;
pub mod par;

pub use counter::{count_pbmc, CountConfig, CountError, Heuristic};
pub use formula::{parse_opb, PbFormula};
pub use num_bigint::BigUint;
