use super::{ChainModel, ChannelModel, NgramLM};
use crate::context::Label;

/// Noisy-channel decipherment model: n-gram prior times substitution
/// channel. Observations are cipher labels.
#[derive(Clone, Copy, Debug)]
pub struct CipherModel<'a> {
    pub lm: &'a NgramLM,
    pub channel: &'a ChannelModel,
}

impl<'a> CipherModel<'a> {
    pub fn new(lm: &'a NgramLM, channel: &'a ChannelModel) -> Self {
        debug_assert_eq!(lm.alphabet().len(), channel.plain_size());
        Self { lm, channel }
    }
}

impl ChainModel for CipherModel<'_> {
    type Obs = Label;

    fn order(&self) -> usize {
        self.lm.order()
    }

    fn num_labels(&self, _slot: usize) -> usize {
        self.channel.plain_size()
    }

    #[inline]
    fn log_weight(&self, _slot: usize, history: &[Label], label: Label, obs: &Label) -> f64 {
        self.lm.log_prob(history, label) + self.channel.log_prob(label, *obs)
    }
}

/// Free-function form of [`CipherModel::log_weight`].
pub fn cipher_log_weight(
    lm: &NgramLM,
    channel: &ChannelModel,
    slot: usize,
    suffix: &[Label],
    y: Label,
    x: Label,
) -> f64 {
    CipherModel::new(lm, channel).log_weight(slot, suffix, y, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Smoothing;

    #[test]
    fn weights_combine_prior_and_channel() {
        let corpus: Vec<char> = "abab".chars().collect();
        let bigram =
            NgramLM::fit(&corpus, 2, Smoothing::AbsoluteDiscounting, 0.25, 0.01, None).unwrap();
        let channel = ChannelModel::uniform(2, 2, 0.01).unwrap();
        let w = cipher_log_weight(&bigram, &channel, 1, &[Label(0)], Label(1), Label(0));
        assert!((w - (0.9375f64.ln() + 0.5f64.ln())).abs() < 1e-14);

        // Root context: unigram plus channel.
        let w = cipher_log_weight(&bigram, &channel, 3, &[], Label(0), Label(1));
        assert!((w - (bigram.prob(&[], Label(0)).ln() + 0.5f64.ln())).abs() < 1e-14);

        let uniform = NgramLM::fit(&corpus, 1, Smoothing::Laplace, 0.25, 0.01, None).unwrap();
        let w = cipher_log_weight(&uniform, &channel, 0, &[], Label(1), Label(1));
        assert!((w - 2.0 * 0.5f64.ln()).abs() < 1e-14);
    }
}
