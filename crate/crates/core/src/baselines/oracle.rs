use crate::context::Label;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::model::ChainModel;

pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Exact quantities from full enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub log_z: f64,
    /// Every assignment with its normalized probability, in mixed-radix
    /// order (first slot most significant).
    pub table: Vec<(Vec<Label>, f64)>,
    pub marginals: Vec<Vec<f64>>,
}

impl OracleResult {
    /// Per-slot argmax of the exact marginals; lowest label wins ties.
    pub fn decode(&self) -> Vec<Label> {
        self.marginals.iter().map(|m| crate::engine::argmax(m)).collect()
    }
}

/// Enumerate every assignment, scoring each label with its full history
/// (the model truncates it to its own window).
pub fn brute_force_oracle<M: ChainModel>(
    model: &M,
    observations: &[M::Obs],
    cap: u128,
) -> Result<OracleResult> {
    let n = observations.len();
    if n == 0 {
        return Err(Error::usage("empty input: nothing to enumerate"));
    }
    let sizes: Vec<usize> = (0..n).map(|slot| model.num_labels(slot)).collect();
    let needed = sizes
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    if needed > cap {
        return Err(Error::CapExceeded {
            what: "brute-force enumeration",
            needed,
            cap,
        });
    }
    let mut assignment = vec![Label(0); n];
    let mut log_masses = Vec::with_capacity(needed as usize);
    let mut assignments = Vec::with_capacity(needed as usize);
    loop {
        let mut total = 0.0;
        for slot in 0..n {
            let w = model.log_weight(slot, &assignment[..slot], assignment[slot], &observations[slot]);
            if !w.is_finite() {
                return Err(Error::Inference {
                    position: slot + 1,
                    message: format!("model returned log-weight {w}"),
                });
            }
            total += w;
        }
        log_masses.push(total);
        assignments.push(assignment.clone());
        // Mixed-radix increment, last slot fastest.
        let mut slot = n;
        loop {
            if slot == 0 {
                let log_z = log_sum_exp(log_masses.iter().copied());
                let mut marginals: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
                let table = assignments
                    .into_iter()
                    .zip(log_masses)
                    .map(|(a, lm)| {
                        let p = (lm - log_z).exp();
                        for (slot, y) in a.iter().enumerate() {
                            marginals[slot][y.index()] += p;
                        }
                        (a, p)
                    })
                    .collect();
                return Ok(OracleResult {
                    log_z,
                    table,
                    marginals,
                });
            }
            slot -= 1;
            if assignment[slot].index() + 1 < sizes[slot] {
                assignment[slot].0 += 1;
                break;
            }
            assignment[slot] = Label(0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TableModel;

    #[test]
    fn uniform_counts_assignments() {
        let model = TableModel::uniform(vec![2, 3, 4], 2).unwrap();
        let r = brute_force_oracle(&model, &model.observations(), 100).unwrap();
        assert!((r.log_z - 24f64.ln()).abs() < 1e-14);
        assert_eq!(r.table.len(), 24);
        assert!((r.marginals[2][3] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hand_enumerated_instance() {
        // Weight 2 for y2 = b after y1 = a, 1 elsewhere: Z = 10, p(y2 = b) = 0.6.
        let model = TableModel::from_fn(vec![2, 2, 2], 2, |slot, h, y| {
            if slot == 1 && h == [Label(0)] && y == Label(1) {
                2.0
            } else {
                1.0
            }
        })
        .unwrap();
        let r = brute_force_oracle(&model, &model.observations(), 100).unwrap();
        assert!((r.log_z - 10f64.ln()).abs() < 1e-14);
        assert!((r.marginals[1][1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn single_position_is_proportional_to_weights() {
        let model = TableModel::from_fn(vec![3], 1, |_, _, y| [1.0, 2.0, 5.0][y.index()]).unwrap();
        let r = brute_force_oracle(&model, &model.observations(), 10).unwrap();
        for (p, w) in r.marginals[0].iter().zip([1.0, 2.0, 5.0]) {
            assert!((p - w / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let model = TableModel::uniform(vec![4; 6], 1).unwrap();
        let err = brute_force_oracle(&model, &model.observations(), 1000).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { needed: 4096, cap: 1000, .. }));
        assert!(err.to_string().contains("1000"));
    }
}
