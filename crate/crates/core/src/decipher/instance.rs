use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::Label;
use crate::error::{Error, Result};

pub const CIPHER_FORMAT: &str = "rcms-cipher";
pub const CIPHER_FORMAT_VERSION: u32 = 1;

/// A substitution-cipher problem, optionally with its solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherInstance {
    pub plain_alphabet: Vec<char>,
    pub cipher_alphabet: Vec<char>,
    pub ciphertext: Vec<Label>,
    /// `key[y]` is the cipher label of plain label `y`.
    pub key: Option<Vec<Label>>,
    pub plaintext: Option<Vec<Label>>,
}

impl CipherInstance {
    pub fn new(
        plain_alphabet: Vec<char>,
        cipher_alphabet: Vec<char>,
        ciphertext: Vec<Label>,
        key: Option<Vec<Label>>,
        plaintext: Option<Vec<Label>>,
    ) -> Result<Self> {
        let instance = Self {
            plain_alphabet,
            cipher_alphabet,
            ciphertext,
            key,
            plaintext,
        };
        instance.check()?;
        Ok(instance)
    }

    fn check(&self) -> Result<()> {
        if self.plain_alphabet.is_empty() || self.cipher_alphabet.is_empty() {
            return Err(Error::usage("alphabets must be nonempty"));
        }
        if self
            .ciphertext
            .iter()
            .any(|x| x.index() >= self.cipher_alphabet.len())
        {
            return Err(Error::usage("ciphertext symbol outside the cipher alphabet"));
        }
        if let Some(key) = &self.key {
            if key.len() != self.plain_alphabet.len() {
                return Err(Error::usage("key must map every plain symbol"));
            }
            let mut seen = vec![false; self.cipher_alphabet.len()];
            for x in key {
                match seen.get_mut(x.index()) {
                    Some(s) if !*s => *s = true,
                    _ => return Err(Error::usage("key is not injective")),
                }
            }
        }
        if let Some(plain) = &self.plaintext {
            if plain.len() != self.ciphertext.len() {
                return Err(Error::usage("plaintext and ciphertext lengths differ"));
            }
            if plain.iter().any(|y| y.index() >= self.plain_alphabet.len()) {
                return Err(Error::usage("plaintext symbol outside the plain alphabet"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ciphertext.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ciphertext.is_empty()
    }

    /// Encrypt `plaintext` with `key`; both alphabets are `alphabet`.
    pub fn from_key(alphabet: Vec<char>, plaintext: Vec<Label>, key: Vec<Label>) -> Result<Self> {
        let ciphertext = plaintext.iter().map(|y| key[y.index()]).collect();
        Self::new(alphabet.clone(), alphabet, ciphertext, Some(key), Some(plaintext))
    }

    pub fn ciphertext_string(&self) -> String {
        self.ciphertext
            .iter()
            .map(|x| self.cipher_alphabet[x.index()])
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let render = |labels: &[Label], alphabet: &[char]| -> String {
            labels.iter().map(|l| alphabet[l.index()]).collect()
        };
        let record = InstanceRecord {
            format: CIPHER_FORMAT.into(),
            version: CIPHER_FORMAT_VERSION,
            plain_alphabet: self.plain_alphabet.iter().collect(),
            cipher_alphabet: self.cipher_alphabet.iter().collect(),
            ciphertext: self.ciphertext_string(),
            key: self.key.as_ref().map(|k| render(k, &self.cipher_alphabet)),
            plaintext: self.plaintext.as_ref().map(|p| render(p, &self.plain_alphabet)),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: InstanceRecord = serde_json::from_str(text)?;
        if record.format != CIPHER_FORMAT || record.version != CIPHER_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {CIPHER_FORMAT} v{CIPHER_FORMAT_VERSION}, found {} v{}",
                record.format, record.version
            )));
        }
        let plain: Vec<char> = record.plain_alphabet.chars().collect();
        let cipher: Vec<char> = record.cipher_alphabet.chars().collect();
        let parse = |s: &str, alphabet: &[char], what: &str| -> Result<Vec<Label>> {
            s.chars()
                .map(|c| {
                    alphabet
                        .iter()
                        .position(|&a| a == c)
                        .map(Label::from)
                        .ok_or_else(|| Error::Format(format!("{what} symbol {c:?} not in alphabet")))
                })
                .collect()
        };
        let ciphertext = parse(&record.ciphertext, &cipher, "ciphertext")?;
        let key = record.key.as_deref().map(|k| parse(k, &cipher, "key")).transpose()?;
        let plaintext = record
            .plaintext
            .as_deref()
            .map(|p| parse(p, &plain, "plaintext"))
            .transpose()?;
        Self::new(plain, cipher, ciphertext, key, plaintext)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    format: String,
    version: u32,
    plain_alphabet: String,
    cipher_alphabet: String,
    ciphertext: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plaintext: Option<String>,
}

/// Sample a contiguous slice of `text` and encrypt it under a uniformly
/// random permutation of `alphabet`. Deterministic in `seed`.
pub fn generate_cipher(
    text: &[char],
    alphabet: &[char],
    length: usize,
    seed: u64,
) -> Result<CipherInstance> {
    if length == 0 {
        return Err(Error::usage("plaintext length must be positive"));
    }
    if text.len() < length {
        return Err(Error::usage(format!(
            "corpus has {} symbols, fewer than the requested {length}",
            text.len()
        )));
    }
    let mut sorted = alphabet.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.gen_range(0..=text.len() - length);
    let mut offenders = Vec::new();
    let plaintext: Vec<Label> = text[start..start + length]
        .iter()
        .map(|c| match sorted.binary_search(c) {
            Ok(k) => Label::from(k),
            Err(_) => {
                offenders.push(*c);
                Label(0)
            }
        })
        .collect();
    if !offenders.is_empty() {
        offenders.sort_unstable();
        offenders.dedup();
        return Err(Error::Ingestion { offenders });
    }
    let mut key: Vec<Label> = (0..sorted.len()).map(Label::from).collect();
    key.shuffle(&mut rng);
    CipherInstance::from_key(sorted, plaintext, key)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text() -> Vec<char> {
        "the quick brown fox jumps over the lazy dog".chars().collect()
    }

    fn alphabet() -> Vec<char> {
        let mut a: Vec<char> = ('a'..='z').collect();
        a.push(' ');
        a
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate_cipher(&text(), &alphabet(), 20, 42).unwrap();
        let b = generate_cipher(&text(), &alphabet(), 20, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let c = generate_cipher(&text(), &alphabet(), 20, 43).unwrap();
        assert_ne!(a.key, c.key);
    }

    #[test]
    fn identity_key_leaves_text_unchanged() {
        let alpha = vec!['a', 'b', 'c'];
        let plain = vec![Label(2), Label(0), Label(1), Label(0)];
        let inst = CipherInstance::from_key(alpha, plain.clone(), vec![Label(0), Label(1), Label(2)])
            .unwrap();
        assert_eq!(inst.ciphertext, plain);
    }

    #[test]
    fn single_symbol_alphabet_has_identity_key() {
        let inst = generate_cipher(&['x'; 10], &['x'], 5, 7).unwrap();
        assert_eq!(inst.key, Some(vec![Label(0)]));
        assert_eq!(inst.ciphertext, vec![Label(0); 5]);
    }

    #[test]
    fn too_short_corpus_and_bad_symbols() {
        assert!(matches!(
            generate_cipher(&text(), &alphabet(), 1000, 1),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            generate_cipher(&['a', '!'], &['a'], 2, 1),
            Err(Error::Ingestion { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let inst = generate_cipher(&text(), &alphabet(), 30, 9).unwrap();
        let back = CipherInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        let bad_key = CipherInstance::new(
            vec!['a', 'b'],
            vec!['a', 'b'],
            vec![Label(0)],
            Some(vec![Label(1), Label(1)]),
            None,
        );
        assert!(bad_key.is_err());
    }
}
