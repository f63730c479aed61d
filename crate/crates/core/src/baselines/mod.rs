//! Comparison points for the engine: beam search without coverage, the
//! union-of-beams hybrid, and exact inference for small instances.

mod beam;
mod exact;
mod oracle;

pub use beam::{beam_search, hybrid_union, BeamResult, Hypothesis, HybridHypothesis, HybridResult};
pub use exact::{exact_forward_backward, ExactResult, DEFAULT_STATE_CAP};
pub use oracle::{brute_force_oracle, OracleResult, DEFAULT_ENUMERATION_CAP};
