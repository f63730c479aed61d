//! Reified context models for chain-structured inference.
//!
//! The engine keeps, at every position of a chain, a sorted set of
//! *contexts*: sets of partial assignments described by a concrete label
//! suffix behind an all-wildcard prefix. Like beam search it retains only the
//! `B` highest-scoring concrete contexts per position, but every pruned
//! expansion is merged into its closest retained ancestor and the root
//! context (the whole space) is always present, so every full assignment
//! keeps positive probability.
//!
//! Modules:
//!
//! * [`context`]: labels, contexts, their ordering and longest-common-suffix
//!   bookkeeping, level validation.
//! * [`engine`]: the expand / select / merge forward pass, the backward pass,
//!   partition function, posteriors and decoding.
//! * [`model`]: the [`ChainModel`] scoring interface, smoothed n-gram language
//!   models, the substitution channel, and table-driven test models.
//! * [`baselines`]: beam search, union-of-beams hybrid, brute-force
//!   enumeration and exact lattice forward-backward.
//! * [`decipher`]: text normalization, cipher generation, EM decipherment and
//!   its accuracy metrics.

pub mod baselines;
pub mod context;
pub mod decipher;
pub mod engine;
pub mod error;
pub mod logspace;
pub mod model;

pub use context::{Context, Label, LabelAlphabet, Level};
pub use engine::{forward_pass, RcmsConfig, Trellis};
pub use error::{Error, Result};
pub use model::ChainModel;
