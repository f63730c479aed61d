use crate::context::Label;
use crate::engine::argmax;
use crate::error::{Error, Result};
use crate::logspace::LogSumAcc;
use crate::model::ChainModel;

pub const DEFAULT_STATE_CAP: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    pub marginals: Vec<Vec<f64>>,
}

impl ExactResult {
    pub fn decode(&self) -> Vec<Label> {
        self.marginals.iter().map(|m| argmax(m)).collect()
    }
}

/// States after `boundary` labels: the last `min(boundary, window)` labels.
struct StateSpace {
    /// Slot of the oldest label in the state.
    start: usize,
    radices: Vec<usize>,
    count: usize,
}

impl StateSpace {
    fn new(sizes: &[usize], boundary: usize, window: usize, cap: u128) -> Result<Self> {
        let start = boundary - boundary.min(window);
        let radices = sizes[start..boundary].to_vec();
        let needed = radices
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        if needed > cap {
            return Err(Error::CapExceeded {
                what: "exact forward-backward",
                needed,
                cap,
            });
        }
        Ok(Self {
            start,
            radices,
            count: needed as usize,
        })
    }

    fn history(&self, mut code: usize, out: &mut Vec<Label>) {
        out.clear();
        out.resize(self.radices.len(), Label(0));
        for (k, &r) in self.radices.iter().enumerate().rev() {
            out[k] = Label::from(code % r);
            code /= r;
        }
    }
}

/// Lattice forward-backward over full `(k - 1)`-label histories.
pub fn exact_forward_backward<M: ChainModel>(
    model: &M,
    observations: &[M::Obs],
    cap: u128,
) -> Result<ExactResult> {
    let n = observations.len();
    if n == 0 {
        return Err(Error::usage("empty input: nothing to infer"));
    }
    let window = model.history_window();
    let sizes: Vec<usize> = (0..n).map(|slot| model.num_labels(slot)).collect();
    let spaces = (0..=n)
        .map(|b| StateSpace::new(&sizes, b, window, cap))
        .collect::<Result<Vec<_>>>()?;

    // Successor code of state `code` at boundary `slot` after label `y`.
    let successor = |slot: usize, code: usize, y: usize| -> usize {
        let from = &spaces[slot];
        let to = &spaces[slot + 1];
        if to.radices.is_empty() {
            return 0;
        }
        let kept = if to.start > from.start {
            code % (from.count / from.radices[0])
        } else {
            code
        };
        kept * sizes[slot] + y
    };

    // Weights per (state, label) are needed twice; cache one boundary at a time.
    let mut history = Vec::with_capacity(window);
    let mut weights_at = |slot: usize| -> Result<Vec<f64>> {
        let space = &spaces[slot];
        let mut w = Vec::with_capacity(space.count * sizes[slot]);
        for code in 0..space.count {
            space.history(code, &mut history);
            for y in 0..sizes[slot] {
                let v = model.log_weight(slot, &history, Label::from(y), &observations[slot]);
                if !v.is_finite() {
                    return Err(Error::Inference {
                        position: slot + 1,
                        message: format!("model returned log-weight {v}"),
                    });
                }
                w.push(v);
            }
        }
        Ok(w)
    };

    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    alpha.push(vec![0.0]);
    for slot in 0..n {
        let w = weights_at(slot)?;
        let mut next = vec![LogSumAcc::new(); spaces[slot + 1].count];
        for (code, &a) in alpha[slot].iter().enumerate() {
            for y in 0..sizes[slot] {
                next[successor(slot, code, y)].add(a + w[code * sizes[slot] + y]);
            }
        }
        alpha.push(next.iter().map(LogSumAcc::value).collect());
    }
    let log_z = {
        let mut acc = LogSumAcc::new();
        alpha[n].iter().for_each(|&a| acc.add(a));
        acc.value()
    };

    let mut beta = vec![0.0; spaces[n].count];
    let mut marginals: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    for slot in (0..n).rev() {
        let w = weights_at(slot)?;
        let mut prev = vec![LogSumAcc::new(); spaces[slot].count];
        for (code, acc) in prev.iter_mut().enumerate() {
            for y in 0..sizes[slot] {
                let b = beta[successor(slot, code, y)] + w[code * sizes[slot] + y];
                acc.add(b);
                marginals[slot][y] += (alpha[slot][code] + b - log_z).exp();
            }
        }
        beta = prev.iter().map(LogSumAcc::value).collect();
    }
    Ok(ExactResult { log_z, marginals })
}
