//! Contexts, their reverse-lexicographic order, and longest-common-suffix
//! bookkeeping.
//!
//! A context at position `i` (the number of labels assigned so far) is the
//! set of partial assignments `y_{1:i}` whose last `len` labels equal a given
//! suffix. The first `i - len` slots are wildcards (`★`), which are never
//! stored. The root context has an empty suffix and contains everything.
//!
//! Contexts are ordered by comparing the last label first, then the one
//! before it, and so on, with the wildcard greater than every concrete label.
//! Under this order every ancestor of a context (a context whose suffix is a
//! suffix of it) sorts after it, and the root sorts last.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rendering of the wildcard slot.
pub const WILDCARD: char = '★';

/// A label interned as a small integer within its position's alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for Label {
    #[inline]
    fn from(v: usize) -> Self {
        Label(v as u32)
    }
}

/// Per-position label sets `Y_1..Y_n`.
///
/// Slot `j` (zero based) holds the labels that may be assigned at chain
/// position `j + 1`. Slots usually share one set, which is stored once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAlphabet {
    sets: Vec<Arc<[String]>>,
}

impl LabelAlphabet {
    pub fn new(sets: Vec<Vec<String>>) -> Result<Self> {
        let sets = sets
            .into_iter()
            .map(|s| Arc::from(s.into_boxed_slice()))
            .collect::<Vec<Arc<[String]>>>();
        for (j, set) in sets.iter().enumerate() {
            check_symbols(set).map_err(|e| Error::usage(format!("alphabet slot {j}: {e}")))?;
        }
        Ok(Self { sets })
    }

    /// The same label set at each of `n` positions.
    pub fn uniform(symbols: Vec<String>, n: usize) -> Result<Self> {
        check_symbols(&symbols).map_err(Error::Usage)?;
        let shared: Arc<[String]> = Arc::from(symbols.into_boxed_slice());
        Ok(Self {
            sets: vec![shared; n],
        })
    }

    /// Number of chain positions.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Size of the label set at slot `j`.
    pub fn size(&self, slot: usize) -> usize {
        self.sets[slot].len()
    }

    pub fn symbols(&self, slot: usize) -> &[String] {
        &self.sets[slot]
    }

    pub fn symbol(&self, slot: usize, label: Label) -> &str {
        &self.sets[slot][label.index()]
    }

    pub fn label_of(&self, slot: usize, symbol: &str) -> Option<Label> {
        self.sets[slot]
            .iter()
            .position(|s| s == symbol)
            .map(Label::from)
    }

    /// Product of the set sizes, saturating at `u128::MAX`.
    pub fn space_size(&self) -> u128 {
        self.sets
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }
}

fn check_symbols(set: &[String]) -> std::result::Result<(), String> {
    if set.is_empty() {
        return Err("label set is empty".into());
    }
    let wildcard = WILDCARD.to_string();
    for (k, s) in set.iter().enumerate() {
        if *s == wildcard {
            return Err(format!("label {k} is the reserved wildcard {WILDCARD}"));
        }
        if set[..k].contains(s) {
            return Err(format!("duplicate label {s:?}"));
        }
    }
    Ok(())
}

/// A suffix-specified set of partial assignments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Context {
    /// Number of assigned positions, `i >= 0`.
    pub position: usize,
    /// The specified labels, oldest first. `suffix.len() <= position`.
    pub suffix: Vec<Label>,
}

impl Context {
    pub fn new(position: usize, suffix: Vec<Label>) -> Result<Self> {
        if suffix.len() > position {
            return Err(Error::usage(format!(
                "suffix of length {} does not fit position {position}",
                suffix.len()
            )));
        }
        Ok(Self { position, suffix })
    }

    pub fn root(position: usize) -> Self {
        Self {
            position,
            suffix: Vec::new(),
        }
    }

    /// Length of the concrete suffix; zero for the root.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.suffix.len()
    }

    pub fn is_root(&self) -> bool {
        self.suffix.is_empty()
    }

    /// Whether `assignment` (a full `y_{1:i}`) lies in this context.
    pub fn contains(&self, assignment: &[Label]) -> bool {
        assignment.len() == self.position && assignment.ends_with(&self.suffix)
    }

    /// Check every suffix label against the alphabet slot it occupies.
    pub fn check(&self, alphabet: &LabelAlphabet) -> Result<()> {
        if self.position > alphabet.len() {
            return Err(Error::usage(format!(
                "context position {} beyond chain length {}",
                self.position,
                alphabet.len()
            )));
        }
        let start = self.position - self.len();
        for (j, &l) in self.suffix.iter().enumerate() {
            if l.index() >= alphabet.size(start + j) {
                return Err(Error::usage(format!(
                    "label {} out of range at slot {}",
                    l.0,
                    start + j
                )));
            }
        }
        Ok(())
    }

    /// Render as a full string with wildcards, e.g. `★ab`.
    pub fn display<'a>(&'a self, alphabet: &'a LabelAlphabet) -> impl fmt::Display + 'a {
        ContextDisplay {
            ctx: self,
            alphabet,
        }
    }
}

struct ContextDisplay<'a> {
    ctx: &'a Context,
    alphabet: &'a LabelAlphabet,
}

impl fmt::Display for ContextDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let start = self.ctx.position - self.ctx.len();
        for _ in 0..start {
            write!(f, "{WILDCARD}")?;
        }
        for (j, &l) in self.ctx.suffix.iter().enumerate() {
            f.write_str(self.alphabet.symbol(start + j, l))?;
        }
        Ok(())
    }
}

/// Reverse-lexicographic comparison of two suffixes: last label first, a
/// missing label (wildcard) is greater than any concrete label.
pub fn compare_suffixes(a: &[Label], b: &[Label]) -> Ordering {
    let mut ia = a.iter().rev();
    let mut ib = b.iter().rev();
    loop {
        match (ia.next(), ib.next()) {
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Equal => continue,
                other => return other,
            },
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (None, None) => return Ordering::Equal,
        }
    }
}

/// Length of the longest common suffix of two suffixes.
pub fn common_suffix_len(a: &[Label], b: &[Label]) -> usize {
    a.iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count()
}

/// Order two contexts at the same position.
pub fn compare_contexts(a: &Context, b: &Context) -> Result<Ordering> {
    same_position(a, b)?;
    Ok(compare_suffixes(&a.suffix, &b.suffix))
}

/// Longest common concrete suffix of two contexts at the same position.
pub fn lcs_pair(a: &Context, b: &Context) -> Result<usize> {
    same_position(a, b)?;
    Ok(common_suffix_len(&a.suffix, &b.suffix))
}

fn same_position(a: &Context, b: &Context) -> Result<()> {
    if a.position != b.position {
        return Err(Error::usage(format!(
            "contexts at different positions ({} vs {})",
            a.position, b.position
        )));
    }
    Ok(())
}

/// The sorted collection of contexts at one position.
///
/// `lcs[k]` is the common-suffix length of entries `k` and `k + 1`, so the
/// common suffix of any pair `a < b` is the minimum of `lcs[a..b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub position: usize,
    pub contexts: Vec<Context>,
    pub lcs: Vec<usize>,
}

/// First broken invariant found by [`Level::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelViolation {
    Empty,
    WrongPosition { index: usize, found: usize },
    SuffixTooLong { index: usize },
    NotSorted { index: usize },
    MissingRoot,
    RootNotLast { index: usize },
    LcsLength { expected: usize, found: usize },
    LcsMismatch { index: usize, expected: usize, found: usize },
}

impl fmt::Display for LevelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelViolation::Empty => write!(f, "level is empty"),
            LevelViolation::WrongPosition { index, found } => {
                write!(f, "entry {index} is at position {found}")
            }
            LevelViolation::SuffixTooLong { index } => {
                write!(f, "entry {index} has a suffix longer than its position")
            }
            LevelViolation::NotSorted { index } => {
                write!(f, "entries {index} and {} are not strictly increasing", index + 1)
            }
            LevelViolation::MissingRoot => write!(f, "missing root"),
            LevelViolation::RootNotLast { index } => {
                write!(f, "root found at index {index}, not last")
            }
            LevelViolation::LcsLength { expected, found } => {
                write!(f, "lcs array has length {found}, expected {expected}")
            }
            LevelViolation::LcsMismatch {
                index,
                expected,
                found,
            } => write!(f, "lcs[{index}] is {found}, expected {expected}"),
        }
    }
}

impl std::error::Error for LevelViolation {}

impl Level {
    /// Build a valid level from arbitrary contexts: sorts, removes
    /// duplicates, adds the root if missing and computes the lcs array.
    pub fn from_contexts(position: usize, mut contexts: Vec<Context>) -> Result<Self> {
        for c in &contexts {
            if c.position != position {
                return Err(Error::usage(format!(
                    "context at position {} in a level at position {position}",
                    c.position
                )));
            }
            if c.len() > position {
                return Err(Error::usage("suffix longer than position"));
            }
        }
        contexts.push(Context::root(position));
        contexts.sort_by(|a, b| compare_suffixes(&a.suffix, &b.suffix));
        contexts.dedup();
        let lcs = contexts
            .windows(2)
            .map(|w| common_suffix_len(&w[0].suffix, &w[1].suffix))
            .collect();
        Ok(Self {
            position,
            contexts,
            lcs,
        })
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Common-suffix length of entries `a < b`, as a range minimum over the
    /// lcs array.
    pub fn range_lcs(&self, a: usize, b: usize) -> Result<usize> {
        if a >= b || b >= self.len() {
            return Err(Error::usage(format!(
                "range_lcs({a}, {b}) needs a < b < {}",
                self.len()
            )));
        }
        Ok(self.lcs[a..b].iter().copied().min().unwrap_or(0))
    }

    /// Index of the entry owning `assignment`: the one with the longest
    /// suffix matching the end of the assignment.
    pub fn locate_owner(&self, assignment: &[Label]) -> Result<usize> {
        if assignment.len() != self.position {
            return Err(Error::usage(format!(
                "assignment of length {} at a level for position {}",
                assignment.len(),
                self.position
            )));
        }
        self.contexts
            .iter()
            .enumerate()
            .filter(|(_, c)| assignment.ends_with(&c.suffix))
            .max_by_key(|(_, c)| c.len())
            .map(|(k, _)| k)
            .ok_or_else(|| Error::usage("no owner: level has no root"))
    }

    /// Check sortedness, root placement and the lcs array against direct
    /// recomputation.
    pub fn validate(&self) -> std::result::Result<(), LevelViolation> {
        if self.contexts.is_empty() {
            return Err(LevelViolation::Empty);
        }
        for (index, c) in self.contexts.iter().enumerate() {
            if c.position != self.position {
                return Err(LevelViolation::WrongPosition {
                    index,
                    found: c.position,
                });
            }
            if c.len() > self.position {
                return Err(LevelViolation::SuffixTooLong { index });
            }
        }
        for (index, w) in self.contexts.windows(2).enumerate() {
            if compare_suffixes(&w[0].suffix, &w[1].suffix) != Ordering::Less {
                return Err(LevelViolation::NotSorted { index });
            }
        }
        match self.contexts.iter().position(Context::is_root) {
            None => return Err(LevelViolation::MissingRoot),
            Some(index) if index + 1 != self.contexts.len() => {
                return Err(LevelViolation::RootNotLast { index })
            }
            Some(_) => {}
        }
        let expected = self.contexts.len() - 1;
        if self.lcs.len() != expected {
            return Err(LevelViolation::LcsLength {
                expected,
                found: self.lcs.len(),
            });
        }
        for (index, w) in self.contexts.windows(2).enumerate() {
            let expected = common_suffix_len(&w[0].suffix, &w[1].suffix);
            if self.lcs[index] != expected {
                return Err(LevelViolation::LcsMismatch {
                    index,
                    expected,
                    found: self.lcs[index],
                });
            }
        }
        Ok(())
    }
}

/// Free-function form of [`Level::validate`].
pub fn validate_level(level: &Level) -> std::result::Result<(), LevelViolation> {
    level.validate()
}
