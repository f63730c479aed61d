use serde::Serialize;

use super::{CipherInstance, EmRun};
use crate::context::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Accuracy {
    /// Fraction of plain symbols whose most likely cipher symbol is the gold
    /// one. Only symbols occurring in the gold plaintext are counted when it
    /// is available.
    pub symbol: f64,
    /// Fraction of positions decoded to the gold plaintext symbol.
    pub token: f64,
}

/// Score a run against the instance's gold key and plaintext.
pub fn mapping_accuracy(run: &EmRun, instance: &CipherInstance) -> Result<Accuracy> {
    let key = instance
        .key
        .as_ref()
        .ok_or_else(|| Error::usage("instance has no gold key"))?;
    let plaintext = instance
        .plaintext
        .as_ref()
        .ok_or_else(|| Error::usage("instance has no gold plaintext"))?;
    let mut present = vec![false; key.len()];
    for y in plaintext {
        present[y.index()] = true;
    }
    let scored: Vec<usize> = (0..key.len()).filter(|&y| present[y]).collect();
    let symbol = if scored.is_empty() {
        0.0
    } else {
        scored
            .iter()
            .filter(|&&y| run.channel.argmax(Label::from(y)) == key[y])
            .count() as f64
            / scored.len() as f64
    };
    let token = if plaintext.is_empty() {
        0.0
    } else {
        run.decoded
            .iter()
            .zip(plaintext)
            .filter(|(a, b)| a == b)
            .count() as f64
            / plaintext.len() as f64
    };
    Ok(Accuracy { symbol, token })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decipher::Method;
    use crate::model::ChannelModel;

    fn run_with(channel: ChannelModel, decoded: Vec<Label>) -> EmRun {
        EmRun {
            method: Method::Exact,
            beam: 1,
            log_likelihoods: vec![0.0],
            log_priors: vec![0.0],
            final_log_likelihood: 0.0,
            channel,
            decoded,
        }
    }

    fn instance(key: Vec<Label>) -> CipherInstance {
        let plain = vec![Label(0), Label(1), Label(2), Label(1)];
        CipherInstance::from_key(vec!['a', 'b', 'c'], plain, key).unwrap()
    }

    #[test]
    fn perfect_channel_scores_one() {
        let key = vec![Label(2), Label(0), Label(1)];
        let inst = instance(key.clone());
        let mut counts = vec![0.0; 9];
        for (y, x) in key.iter().enumerate() {
            counts[y * 3 + x.index()] = 10.0;
        }
        let ch = ChannelModel::from_counts(3, 3, counts, 0.01).unwrap();
        let run = run_with(ch, inst.plaintext.clone().unwrap());
        let acc = mapping_accuracy(&run, &inst).unwrap();
        assert_eq!(acc, Accuracy { symbol: 1.0, token: 1.0 });
    }

    #[test]
    fn uniform_channel_ties_to_first_cipher_symbol() {
        // Ties pick cipher label 0, which is gold only for plain 'b'.
        let inst = instance(vec![Label(2), Label(0), Label(1)]);
        let run = run_with(ChannelModel::uniform(3, 3, 0.01).unwrap(), vec![Label(0); 4]);
        let acc = mapping_accuracy(&run, &inst).unwrap();
        assert!((acc.symbol - 1.0 / 3.0).abs() < 1e-15);
        assert!((acc.token - 0.25).abs() < 1e-15);
    }

    #[test]
    fn derangement_against_identity_scores_zero() {
        let inst = instance(vec![Label(1), Label(2), Label(0)]);
        let mut counts = vec![0.0; 9];
        for y in 0..3 {
            counts[y * 3 + y] = 5.0;
        }
        let ch = ChannelModel::from_counts(3, 3, counts, 0.01).unwrap();
        let acc = mapping_accuracy(&run_with(ch, vec![Label(0); 4]), &inst).unwrap();
        assert_eq!(acc.symbol, 0.0);
    }

    #[test]
    fn missing_gold_is_a_usage_error() {
        let mut inst = instance(vec![Label(0), Label(1), Label(2)]);
        inst.key = None;
        let run = run_with(ChannelModel::uniform(3, 3, 0.01).unwrap(), vec![Label(0); 4]);
        assert!(matches!(mapping_accuracy(&run, &inst), Err(Error::Usage(_))));
    }
}
