//! The scoring interface consumed by the inference engines, and its
//! implementations.

mod channel;
mod cipher;
mod ngram;
mod table;

pub use channel::{channel_prob, ChannelModel};
pub use cipher::{cipher_log_weight, CipherModel};
pub use ngram::{lm_prob, NgramLM, Smoothing, NGRAM_FORMAT, NGRAM_FORMAT_VERSION};
pub use table::TableModel;

use crate::context::Label;

/// A position-wise log-weight function over `(history, label, observation)`.
///
/// Slots are zero based: `log_weight(j, ..)` scores the label assigned at
/// chain position `j + 1`. The history holds the specified labels immediately
/// before that slot, oldest first. It may be shorter than
/// [`history_window`](ChainModel::history_window) either because the chain
/// has just started or because the context left earlier labels unspecified;
/// implementations back off in both cases.
pub trait ChainModel {
    type Obs;

    /// Maximum n-gram order `k`; at most the last `k - 1` history labels
    /// influence a weight.
    fn order(&self) -> usize;

    fn num_labels(&self, slot: usize) -> usize;

    fn log_weight(&self, slot: usize, history: &[Label], label: Label, obs: &Self::Obs) -> f64;

    fn history_window(&self) -> usize {
        self.order().saturating_sub(1)
    }
}

impl<M: ChainModel + ?Sized> ChainModel for &M {
    type Obs = M::Obs;

    fn order(&self) -> usize {
        (**self).order()
    }

    fn num_labels(&self, slot: usize) -> usize {
        (**self).num_labels(slot)
    }

    #[inline]
    fn log_weight(&self, slot: usize, history: &[Label], label: Label, obs: &Self::Obs) -> f64 {
        (**self).log_weight(slot, history, label, obs)
    }

    fn history_window(&self) -> usize {
        (**self).history_window()
    }
}

/// The last `min(len, window)` labels of `history`.
#[inline]
pub(crate) fn tail(history: &[Label], window: usize) -> &[Label] {
    &history[history.len().saturating_sub(window)..]
}
