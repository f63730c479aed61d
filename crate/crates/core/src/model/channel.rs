use crate::context::Label;
use crate::error::{Error, Result};

/// Substitution channel `p(x | y)` from plain labels `y` to cipher labels
/// `x`, Laplace-smoothed over (expected) counts.
///
/// `epsilon = 0` gives the unsmoothed maximum-likelihood estimate; a row
/// without counts is then uniform. Zero entries have log-probability
/// `-inf`, which the approximate engines reject.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    plain: usize,
    cipher: usize,
    epsilon: f64,
    counts: Vec<f64>,
    log_probs: Vec<f64>,
}

impl ChannelModel {
    /// All counts zero, so every row is uniform.
    pub fn uniform(plain: usize, cipher: usize, epsilon: f64) -> Result<Self> {
        Self::from_counts(plain, cipher, vec![0.0; plain * cipher], epsilon)
    }

    /// Row-major `plain x cipher` counts.
    pub fn from_counts(plain: usize, cipher: usize, counts: Vec<f64>, epsilon: f64) -> Result<Self> {
        if plain == 0 || cipher == 0 {
            return Err(Error::usage("channel alphabets must be nonempty"));
        }
        if counts.len() != plain * cipher {
            return Err(Error::usage(format!(
                "expected {} channel counts, got {}",
                plain * cipher,
                counts.len()
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::usage(format!("smoothing {epsilon} must be non-negative")));
        }
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::usage(format!("invalid channel count {bad}")));
        }
        let mut log_probs = Vec::with_capacity(counts.len());
        for row in counts.chunks(cipher) {
            let denom = row.iter().sum::<f64>() + epsilon * cipher as f64;
            if denom > 0.0 {
                log_probs.extend(row.iter().map(|c| ((c + epsilon) / denom).ln()));
            } else {
                log_probs.extend(row.iter().map(|_| -(cipher as f64).ln()));
            }
        }
        Ok(Self {
            plain,
            cipher,
            epsilon,
            counts,
            log_probs,
        })
    }

    /// Re-estimate from expected counts (the M-step).
    pub fn reestimate(&self, counts: Vec<f64>) -> Result<Self> {
        Self::from_counts(self.plain, self.cipher, counts, self.epsilon)
    }

    pub fn plain_size(&self) -> usize {
        self.plain
    }

    pub fn cipher_size(&self) -> usize {
        self.cipher
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// `epsilon * sum_{y,x} log p(x | y)`: the log density, up to a
    /// constant, of the Dirichlet prior whose MAP estimate the smoothed
    /// M-step computes. Zero when unsmoothed.
    pub fn log_prior(&self) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        self.epsilon * self.log_probs.iter().sum::<f64>()
    }

    pub fn prob(&self, y: Label, x: Label) -> f64 {
        self.log_prob(y, x).exp()
    }

    #[inline]
    pub fn log_prob(&self, y: Label, x: Label) -> f64 {
        self.log_probs[y.index() * self.cipher + x.index()]
    }

    pub fn row(&self, y: Label) -> Vec<f64> {
        (0..self.cipher)
            .map(|x| self.prob(y, Label::from(x)))
            .collect()
    }

    /// Most likely cipher label for `y`; the lowest index wins ties.
    pub fn argmax(&self, y: Label) -> Label {
        let row = &self.log_probs[y.index() * self.cipher..(y.index() + 1) * self.cipher];
        let mut best = 0;
        for (x, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = x;
            }
        }
        Label::from(best)
    }
}

/// Free-function form of [`ChannelModel::prob`].
pub fn channel_prob(ch: &ChannelModel, y: Label, x: Label) -> f64 {
    ch.prob(y, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_arithmetic() {
        // y -> x counts 3 of 4 with |X| = 2.
        let ch = ChannelModel::from_counts(1, 2, vec![3.0, 1.0], 0.01).unwrap();
        assert!((channel_prob(&ch, Label(0), Label(0)) - 3.01 / 4.02).abs() < 1e-15);
        assert!((ch.prob(Label(0), Label(0)) - 0.748_756).abs() < 1e-6);
    }

    #[test]
    fn uniform_and_degenerate() {
        let ch = ChannelModel::uniform(3, 4, 0.01).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                assert!((ch.prob(Label(y), Label(x)) - 0.25).abs() < 1e-15);
            }
        }
        assert_eq!(ch.argmax(Label(1)), Label(0));
        let one = ChannelModel::uniform(2, 1, 0.01).unwrap();
        assert!((one.prob(Label(1), Label(0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reestimated_rows_normalize() {
        let ch = ChannelModel::uniform(3, 3, 0.01).unwrap();
        let next = ch
            .reestimate(vec![0.3, 12.5, 0.0, 7.25, 0.0, 1e-9, 0.0, 0.0, 0.0])
            .unwrap();
        for y in 0..3 {
            let s: f64 = next.row(Label(y)).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(next.argmax(Label(0)), Label(1));
        assert!(ch.reestimate(vec![1.0; 8]).is_err());
        assert!(ch.reestimate(vec![-1.0; 9]).is_err());
        assert!(ChannelModel::uniform(2, 2, -0.5).is_err());
    }

    #[test]
    fn unsmoothed_is_maximum_likelihood() {
        let ch = ChannelModel::from_counts(2, 2, vec![3.0, 1.0, 0.0, 0.0], 0.0).unwrap();
        assert!((ch.prob(Label(0), Label(0)) - 0.75).abs() < 1e-15);
        assert!((ch.prob(Label(1), Label(1)) - 0.5).abs() < 1e-15);
        assert_eq!(ch.log_prior(), 0.0);
        let zero = ChannelModel::from_counts(1, 2, vec![2.0, 0.0], 0.0).unwrap();
        assert_eq!(zero.log_prob(Label(0), Label(1)), f64::NEG_INFINITY);
    }
}
