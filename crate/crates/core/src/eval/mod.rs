//! Ground truth and workloads: the exact rank oracle, stream generators,
//! the adaptive lower-bound adversary and the error harness.

pub mod adversary;
pub mod generators;
pub mod label;
pub mod measure;
pub mod oracle;

pub use label::Label;
pub use oracle::RankOracle;
