//! The built-in invariant suite behind `validate`.

use std::io::Write;

use rcms_core::baselines::{brute_force_oracle, exact_forward_backward, DEFAULT_ENUMERATION_CAP, DEFAULT_STATE_CAP};
use rcms_core::context::validate_level;
use rcms_core::engine::{infer, RcmsConfig};
use rcms_core::model::TableModel;
use rcms_core::Label;

use crate::Result;

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    /// Descriptions of the failing cases.
    pub violations: Vec<String>,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn all_assignments(sizes: &[usize]) -> Vec<Vec<Label>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|p: Vec<Label>| {
                (0..s).map(move |y| {
                    let mut next = p.clone();
                    next.push(Label::from(y));
                    next
                })
            })
            .collect();
    }
    out
}

/// Random chains with `n <= 5`, `|Y| <= 3` and orders 1 to 3, checked at
/// widths 1, 2, 4 and full.
pub fn run_suite(instances: usize, seed: u64) -> Result<Vec<Check>> {
    let mut levels = Check { name: "level validation", cases: 0, violations: Vec::new() };
    let mut oracle = Check { name: "oracle equivalence", cases: 0, violations: Vec::new() };
    let mut consistency = Check { name: "self-consistency", cases: 0, violations: Vec::new() };
    let mut coverage = Check { name: "coverage", cases: 0, violations: Vec::new() };
    for i in 0..instances {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        let n = 1 + (s % 5) as usize;
        let sizes: Vec<usize> = (0..n).map(|j| 1 + ((s >> (2 * j)) % 3) as usize).collect();
        let order = 1 + (s % 3) as usize;
        let model = TableModel::random(sizes.clone(), order, 2.0, s)?;
        let obs = model.observations();
        let full: usize = sizes.iter().product();
        let brute = brute_force_oracle(&model, &obs, DEFAULT_ENUMERATION_CAP)?;
        let exact = exact_forward_backward(&model, &obs, DEFAULT_STATE_CAP)?;
        let everything = all_assignments(&sizes);
        let tag = |beam: usize| format!("chain {i} (sizes {sizes:?}, order {order}) at B={beam}");

        oracle.cases += 1;
        if !close(exact.log_z, brute.log_z, 1e-9) {
            oracle.violations.push(format!("chain {i}: exact logZ {} vs enumeration {}", exact.log_z, brute.log_z));
        }
        for beam in [1, 2, 4, full] {
            let t = infer(&model, &obs, RcmsConfig::new(beam))?;
            for p in 0..=n {
                levels.cases += 1;
                if let Err(v) = validate_level(&t.level(p)) {
                    levels.violations.push(format!("{} level {p}: {v}", tag(beam)));
                }
            }
            let z = t.log_partition()?;
            if beam == full {
                oracle.cases += 1;
                let marginals_ok = t
                    .marginals()?
                    .iter()
                    .flatten()
                    .zip(brute.marginals.iter().flatten())
                    .all(|(a, b)| close(*a, *b, 1e-9));
                if !close(z, brute.log_z, 1e-9) || !marginals_ok {
                    oracle.violations.push(format!("{}: logZ {z} vs enumeration {}", tag(beam), brute.log_z));
                }
            }
            consistency.cases += 1;
            let masses_ok = t.level_log_masses()?.iter().all(|m| close(*m, z, 1e-9));
            let mut sums = vec![0.0; n + 1];
            t.edge_posteriors(&model, |e| sums[e.position] += e.mass)?;
            if !masses_ok || sums[1..].iter().any(|s| (s - 1.0).abs() > 1e-12) {
                consistency.violations.push(format!("{}: level masses or edge posteriors off", tag(beam)));
            }
            coverage.cases += 1;
            let mut total = 0.0;
            let mut positive = true;
            for y in &everything {
                let q = t.assignment_log_prob(&model, y)?;
                positive &= q.is_finite();
                total += q.exp();
            }
            if !positive || (total - 1.0).abs() > 1e-9 {
                coverage.violations.push(format!("{}: induced mass {total}, all positive {positive}", tag(beam)));
            }
        }
    }
    Ok(vec![levels, oracle, consistency, coverage])
}

pub fn report<W: Write>(checks: &[Check], mut out: W) -> std::io::Result<usize> {
    let mut violations = 0;
    for c in checks {
        let status = if c.violations.is_empty() { "ok" } else { "VIOLATION" };
        writeln!(out, "{status:<9} {} ({} cases)", c.name, c.cases)?;
        for v in &c.violations {
            writeln!(out, "          {v}")?;
        }
        violations += c.violations.len();
    }
    Ok(violations)
}
