//! The reified-context inference engine.
//!
//! A forward pass repeats three steps per position: expand the previous
//! level by every label ([`expand_level`]), mark the `B` best expansions
//! ([`select_active`]), and merge everything into its least active ancestor
//! ([`merge_level`]). The backward pass then propagates backward messages,
//! giving the normalizer, marginals and edge posteriors of the induced model.

mod step;
mod trellis;

pub use step::{expand_level, merge_level, select_active, ENode, Expansion, MNode, MergedLevel};
pub use trellis::{forward_pass, EdgePosterior, RcmsConfig, StepStats, Trellis};

pub(crate) use trellis::argmax;

use crate::error::Result;
use crate::model::ChainModel;

/// Forward and backward pass in one call.
pub fn infer<M: ChainModel>(
    model: &M,
    observations: &[M::Obs],
    config: RcmsConfig,
) -> Result<Trellis<M::Obs>>
where
    M::Obs: Clone,
{
    let mut trellis = forward_pass(model, observations, config)?;
    trellis.backward_pass(model)?;
    Ok(trellis)
}
