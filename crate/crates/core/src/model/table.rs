use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{tail, ChainModel};
use crate::context::Label;
use crate::error::{Error, Result};

const MAX_TABLE_ENTRIES: usize = 1 << 26;

/// A dense lookup-table model without observations.
///
/// Every `(slot, history, label)` with history length up to
/// `min(slot, order - 1)` has its own log-weight, so shorter (wildcard)
/// histories are scored independently of the longer ones. Mostly used for
/// synthetic instances and tests.
#[derive(Clone, Debug)]
pub struct TableModel {
    order: usize,
    sizes: Vec<usize>,
    // tables[slot][history_len][history_index * sizes[slot] + label]
    tables: Vec<Vec<Vec<f64>>>,
}

impl TableModel {
    /// Build from a log-weight function.
    pub fn from_log_fn<F>(sizes: Vec<usize>, order: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[Label], Label) -> f64,
    {
        if order == 0 {
            return Err(Error::usage("model order must be at least 1"));
        }
        if sizes.contains(&0) {
            return Err(Error::usage("every slot needs at least one label"));
        }
        let window = order - 1;
        let mut tables = Vec::with_capacity(sizes.len());
        let mut history = Vec::with_capacity(window);
        for slot in 0..sizes.len() {
            let mut per_len = Vec::new();
            for len in 0..=window.min(slot) {
                let radices = &sizes[slot - len..slot];
                let count = radices
                    .iter()
                    .try_fold(sizes[slot], |acc: usize, &r| acc.checked_mul(r))
                    .filter(|&c| c <= MAX_TABLE_ENTRIES)
                    .ok_or_else(|| Error::usage("table model too large"))?;
                let mut table = Vec::with_capacity(count);
                for code in 0..count / sizes[slot] {
                    decode(code, radices, &mut history);
                    for y in 0..sizes[slot] {
                        let w = f(slot, &history, Label::from(y));
                        if !w.is_finite() {
                            return Err(Error::Inference {
                                position: slot + 1,
                                message: format!("non-finite table weight {w}"),
                            });
                        }
                        table.push(w);
                    }
                }
                per_len.push(table);
            }
            tables.push(per_len);
        }
        Ok(Self {
            order,
            sizes,
            tables,
        })
    }

    /// Build from a (positive) weight function.
    pub fn from_fn<F>(sizes: Vec<usize>, order: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[Label], Label) -> f64,
    {
        Self::from_log_fn(sizes, order, |j, h, y| f(j, h, y).ln())
    }

    /// All weights equal to one.
    pub fn uniform(sizes: Vec<usize>, order: usize) -> Result<Self> {
        Self::from_log_fn(sizes, order, |_, _, _| 0.0)
    }

    /// Log-weights drawn uniformly from `[-spread, spread]`.
    pub fn random(sizes: Vec<usize>, order: usize, spread: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_log_fn(sizes, order, |_, _, _| rng.gen_range(-spread..=spread))
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Observation placeholder sequence for this model's chain.
    pub fn observations(&self) -> Vec<()> {
        vec![(); self.sizes.len()]
    }
}

fn decode(mut code: usize, radices: &[usize], out: &mut Vec<Label>) {
    out.clear();
    out.resize(radices.len(), Label(0));
    for (slot, &r) in radices.iter().enumerate().rev() {
        out[slot] = Label::from(code % r);
        code /= r;
    }
}

impl ChainModel for TableModel {
    type Obs = ();

    fn order(&self) -> usize {
        self.order
    }

    fn num_labels(&self, slot: usize) -> usize {
        self.sizes[slot]
    }

    #[inline]
    fn log_weight(&self, slot: usize, history: &[Label], label: Label, _obs: &()) -> f64 {
        let h = tail(history, self.order - 1);
        let h = tail(h, slot);
        let start = slot - h.len();
        let mut code = 0usize;
        for (j, &l) in h.iter().enumerate() {
            code = code * self.sizes[start + j] + l.index();
        }
        self.tables[slot][h.len()][code * self.sizes[slot] + label.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_matches_generator() {
        let model = TableModel::from_log_fn(vec![2, 3, 2, 4], 3, |j, h, y| {
            (j * 100 + h.len() * 10 + y.index()) as f64
                + h.iter().map(|l| l.index() as f64 * 0.001).sum::<f64>()
        })
        .unwrap();
        let w = model.log_weight(3, &[Label(2), Label(1)], Label(3), &());
        assert!((w - (300.0 + 20.0 + 3.0 + 0.003)).abs() < 1e-12);
        // Longer histories are truncated to order - 1.
        let w2 = model.log_weight(3, &[Label(0), Label(2), Label(1)], Label(3), &());
        assert_eq!(w, w2);
        // Short history backs off to its own table.
        let w3 = model.log_weight(3, &[Label(1)], Label(0), &());
        assert!((w3 - (300.0 + 10.0 + 0.001)).abs() < 1e-12);
    }

    #[test]
    fn random_is_seeded() {
        let a = TableModel::random(vec![3; 4], 2, 1.0, 7).unwrap();
        let b = TableModel::random(vec![3; 4], 2, 1.0, 7).unwrap();
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TableModel::uniform(vec![2, 0], 2).is_err());
        assert!(TableModel::uniform(vec![2, 2], 0).is_err());
        assert!(TableModel::from_fn(vec![2], 1, |_, _, _| 0.0).is_err());
    }
}
