//! Character n-gram language models with absolute discounting or Laplace
//! smoothing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tail;
use crate::context::Label;
use crate::error::{Error, Result};

pub const NGRAM_FORMAT: &str = "rcms-ngram";
pub const NGRAM_FORMAT_VERSION: u32 = 1;

/// Dense log-probability tables are built for history lengths whose table
/// has at most this many entries.
const DENSE_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Interpolated absolute discounting over a Laplace unigram.
    AbsoluteDiscounting,
    Laplace,
}

impl Smoothing {
    pub fn as_str(self) -> &'static str {
        match self {
            Smoothing::AbsoluteDiscounting => "absolute-discounting",
            Smoothing::Laplace => "laplace",
        }
    }

    /// The other mode; used as the second criterion of the hybrid baseline.
    pub fn alternate(self) -> Self {
        match self {
            Smoothing::AbsoluteDiscounting => Smoothing::Laplace,
            Smoothing::Laplace => Smoothing::AbsoluteDiscounting,
        }
    }
}

impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute-discounting" | "ad" | "absolute" => Ok(Smoothing::AbsoluteDiscounting),
            "laplace" => Ok(Smoothing::Laplace),
            other => Err(Error::usage(format!("unknown smoothing mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct HistoryCounts {
    total: u64,
    distinct: u64,
    successors: Vec<u64>,
}

/// A fitted character n-gram model of order `k`.
#[derive(Clone, Debug)]
pub struct NgramLM {
    order: usize,
    smoothing: Smoothing,
    discount: f64,
    epsilon: f64,
    alphabet: Vec<char>,
    // counts[l] maps histories of length l to successor counts.
    counts: Vec<HashMap<Vec<Label>, HistoryCounts>>,
    // dense[l][history_code * |Y| + y] = ln p(y | history), when small enough.
    dense: Vec<Option<Vec<f64>>>,
}

impl NgramLM {
    /// Fit on a character corpus. The alphabet is the sorted set of corpus
    /// characters, extended by `declared` when given; with a declared
    /// alphabet every corpus character must belong to it.
    pub fn fit(
        corpus: &[char],
        order: usize,
        smoothing: Smoothing,
        discount: f64,
        epsilon: f64,
        declared: Option<&[char]>,
    ) -> Result<Self> {
        let mut alphabet: Vec<char> = corpus.to_vec();
        if let Some(declared) = declared {
            let mut offenders: Vec<char> = corpus
                .iter()
                .copied()
                .filter(|c| !declared.contains(c))
                .collect();
            if !offenders.is_empty() {
                offenders.sort_unstable();
                offenders.dedup();
                return Err(Error::Ingestion { offenders });
            }
            alphabet.extend_from_slice(declared);
        }
        alphabet.sort_unstable();
        alphabet.dedup();
        let labels = corpus
            .iter()
            .map(|c| Label::from(alphabet.binary_search(c).unwrap_or(0)))
            .collect::<Vec<_>>();
        Self::fit_labels(&labels, alphabet, order, smoothing, discount, epsilon)
    }

    /// Fit on an already interned corpus over `alphabet`.
    pub fn fit_labels(
        corpus: &[Label],
        alphabet: Vec<char>,
        order: usize,
        smoothing: Smoothing,
        discount: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::usage("n-gram order must be at least 1"));
        }
        if corpus.is_empty() {
            return Err(Error::usage("empty corpus"));
        }
        if alphabet.is_empty() {
            return Err(Error::usage("empty alphabet"));
        }
        if let Some(bad) = corpus.iter().find(|l| l.index() >= alphabet.len()) {
            return Err(Error::usage(format!("corpus label {} out of range", bad.0)));
        }
        let mut counts = vec![HashMap::new(); order];
        for (len, table) in counts.iter_mut().enumerate() {
            for t in len..corpus.len() {
                add_count(table, &corpus[t - len..t], corpus[t], alphabet.len(), 1);
            }
        }
        Self::from_counts(order, smoothing, discount, epsilon, alphabet, counts)
    }

    fn from_counts(
        order: usize,
        smoothing: Smoothing,
        discount: f64,
        epsilon: f64,
        alphabet: Vec<char>,
        counts: Vec<HashMap<Vec<Label>, HistoryCounts>>,
    ) -> Result<Self> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::usage(format!("discount {discount} not in (0, 1]")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::usage(format!("smoothing {epsilon} must be positive")));
        }
        let mut lm = Self {
            order,
            smoothing,
            discount,
            epsilon,
            alphabet,
            counts,
            dense: Vec::new(),
        };
        lm.build_dense();
        Ok(lm)
    }

    fn build_dense(&mut self) {
        let size = self.alphabet.len();
        let mut dense = Vec::with_capacity(self.order);
        let mut history = Vec::new();
        for len in 0..self.order {
            let entries = (0..=len).try_fold(1usize, |acc, _| acc.checked_mul(size));
            let table = entries.filter(|&e| e <= DENSE_LIMIT).map(|entries| {
                let mut table = Vec::with_capacity(entries);
                for code in 0..entries / size {
                    history.clear();
                    let mut c = code;
                    for _ in 0..len {
                        history.push(Label::from(c % size));
                        c /= size;
                    }
                    history.reverse();
                    for y in 0..size {
                        table.push(self.prob(&history, Label::from(y)).ln());
                    }
                }
                table
            });
            dense.push(table);
        }
        self.dense = dense;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn label_of(&self, c: char) -> Option<Label> {
        self.alphabet.binary_search(&c).ok().map(Label::from)
    }

    /// Intern a string over this model's alphabet.
    pub fn encode(&self, text: &[char]) -> Result<Vec<Label>> {
        let mut offenders = Vec::new();
        let labels = text
            .iter()
            .map(|&c| {
                self.label_of(c).unwrap_or_else(|| {
                    offenders.push(c);
                    Label(0)
                })
            })
            .collect();
        if offenders.is_empty() {
            Ok(labels)
        } else {
            offenders.sort_unstable();
            offenders.dedup();
            Err(Error::Ingestion { offenders })
        }
    }

    pub fn decode(&self, labels: &[Label]) -> String {
        labels.iter().map(|l| self.alphabet[l.index()]).collect()
    }

    /// The same counts under different smoothing hyperparameters.
    pub fn with_smoothing(&self, smoothing: Smoothing, discount: f64, epsilon: f64) -> Result<Self> {
        Self::from_counts(
            self.order,
            smoothing,
            discount,
            epsilon,
            self.alphabet.clone(),
            self.counts.clone(),
        )
    }

    /// `p(y | history)`. Histories longer than `k - 1` are truncated to their
    /// last `k - 1` labels; shorter ones are scored at their own length.
    pub fn prob(&self, history: &[Label], y: Label) -> f64 {
        let h = tail(history, self.order - 1);
        let size = self.alphabet.len() as f64;
        match self.smoothing {
            Smoothing::Laplace => {
                let (c_hy, c_h) = self.lookup(h, y);
                (c_hy as f64 + self.epsilon) / (c_h as f64 + self.epsilon * size)
            }
            Smoothing::AbsoluteDiscounting => {
                if h.is_empty() {
                    let (c_y, n) = self.lookup(h, y);
                    return (c_y as f64 + self.epsilon) / (n as f64 + self.epsilon * size);
                }
                match self.counts[h.len()].get(h) {
                    Some(stats) if stats.total > 0 => {
                        let total = stats.total as f64;
                        let c_hy = stats.successors[y.index()] as f64;
                        let backoff = self.discount * stats.distinct as f64 / total;
                        (c_hy - self.discount).max(0.0) / total + backoff * self.prob(&h[1..], y)
                    }
                    _ => self.prob(&h[1..], y),
                }
            }
        }
    }

    /// `ln p(y | history)`, from the dense table when one exists.
    #[inline]
    pub fn log_prob(&self, history: &[Label], y: Label) -> f64 {
        let h = tail(history, self.order - 1);
        match &self.dense[h.len()] {
            Some(table) => {
                let size = self.alphabet.len();
                let code = h.iter().fold(0usize, |acc, l| acc * size + l.index());
                table[code * size + y.index()]
            }
            None => self.prob(h, y).ln(),
        }
    }

    fn lookup(&self, h: &[Label], y: Label) -> (u64, u64) {
        self.counts[h.len()]
            .get(h)
            .map(|s| (s.successors[y.index()], s.total))
            .unwrap_or((0, 0))
    }

    /// Raw n-gram count of `history` followed by `y`.
    pub fn count(&self, history: &[Label], y: Label) -> u64 {
        if history.len() >= self.order {
            return 0;
        }
        self.lookup(history, y).0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: NgramRecord = serde_json::from_str(text)?;
        Self::from_record(record)
    }

    fn to_record(&self) -> NgramRecord {
        let mut ngrams = BTreeMap::new();
        for table in &self.counts {
            for (history, stats) in table {
                let prefix: String = history.iter().map(|l| self.alphabet[l.index()]).collect();
                for (y, &c) in stats.successors.iter().enumerate() {
                    if c > 0 {
                        let mut key = prefix.clone();
                        key.push(self.alphabet[y]);
                        ngrams.insert(key, c);
                    }
                }
            }
        }
        NgramRecord {
            format: NGRAM_FORMAT.to_string(),
            version: NGRAM_FORMAT_VERSION,
            order: self.order,
            smoothing: self.smoothing,
            discount: self.discount,
            epsilon: self.epsilon,
            alphabet: self.alphabet.iter().collect(),
            ngrams,
        }
    }

    fn from_record(record: NgramRecord) -> Result<Self> {
        if record.format != NGRAM_FORMAT || record.version != NGRAM_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {NGRAM_FORMAT} v{NGRAM_FORMAT_VERSION}, found {} v{}",
                record.format, record.version
            )));
        }
        if record.order == 0 {
            return Err(Error::Format("order must be at least 1".into()));
        }
        let alphabet: Vec<char> = record.alphabet.chars().collect();
        if alphabet.is_empty() || alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("alphabet must be nonempty and sorted".into()));
        }
        let mut counts = vec![HashMap::new(); record.order];
        for (key, c) in record.ngrams {
            let chars: Vec<char> = key.chars().collect();
            if chars.is_empty() || chars.len() > record.order {
                return Err(Error::Format(format!("n-gram {key:?} has the wrong length")));
            }
            let labels = chars
                .iter()
                .map(|ch| alphabet.binary_search(ch).map(Label::from))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Format(format!("n-gram {key:?} outside the alphabet")))?;
            let (y, history) = labels.split_last().expect("nonempty");
            add_count(&mut counts[history.len()], history, *y, alphabet.len(), c);
        }
        Self::from_counts(
            record.order,
            record.smoothing,
            record.discount,
            record.epsilon,
            alphabet,
            counts,
        )
    }
}

fn add_count(
    table: &mut HashMap<Vec<Label>, HistoryCounts>,
    history: &[Label],
    y: Label,
    size: usize,
    by: u64,
) {
    let stats = table.entry(history.to_vec()).or_insert_with(|| HistoryCounts {
        successors: vec![0; size],
        ..HistoryCounts::default()
    });
    if stats.successors[y.index()] == 0 && by > 0 {
        stats.distinct += 1;
    }
    stats.successors[y.index()] += by;
    stats.total += by;
}

/// Serialized form: n-gram counts of every length `1..=order` plus the
/// smoothing hyperparameters.
#[derive(Serialize, Deserialize)]
struct NgramRecord {
    format: String,
    version: u32,
    order: usize,
    smoothing: Smoothing,
    discount: f64,
    epsilon: f64,
    alphabet: String,
    ngrams: BTreeMap<String, u64>,
}

/// Free-function form of [`NgramLM::prob`].
pub fn lm_prob(lm: &NgramLM, history: &[Label], y: Label) -> f64 {
    lm.prob(history, y)
}
