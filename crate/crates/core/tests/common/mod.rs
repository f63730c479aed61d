#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcms_core::model::{ChainModel, TableModel};
use rcms_core::Label;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// A random table model with `n` slots of (possibly differing) sizes.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, max_size: usize, order: usize) -> TableModel {
    let sizes = (0..n).map(|_| rng.gen_range(1..=max_size)).collect();
    TableModel::random(sizes, order, 2.0, rng.gen()).unwrap()
}

pub fn space(model: &TableModel) -> usize {
    model.sizes().iter().product()
}

/// Every assignment of the chain, first slot most significant.
pub fn assignments(sizes: &[usize]) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |y| {
                    let mut next = prefix.clone();
                    next.push(Label::from(y));
                    next
                })
            })
            .collect();
    }
    out
}

/// Unnormalized log score of an assignment prefix under full histories.
pub fn prefix_log_score(model: &TableModel, prefix: &[Label]) -> f64 {
    prefix
        .iter()
        .enumerate()
        .map(|(slot, &y)| model.log_weight(slot, &prefix[..slot], y, &()))
        .sum()
}

pub fn log_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn random_assignment(rng: &mut ChaCha8Rng, sizes: &[usize]) -> Vec<Label> {
    sizes.iter().map(|&s| Label::from(rng.gen_range(0..s))).collect()
}
