mod common;

use common::*;
use proptest::prelude::*;
use rcms_core::baselines::{brute_force_oracle, DEFAULT_ENUMERATION_CAP};
use rcms_core::engine::{forward_pass, infer, RcmsConfig, Trellis};
use rcms_core::model::TableModel;
use rcms_core::{ChainModel, Label, Level};

fn run(model: &TableModel, beam: usize) -> Trellis<()> {
    infer(model, &model.observations(), RcmsConfig::new(beam)).unwrap()
}

#[test]
fn uniform_partition_is_space_size() {
    for n in 1..=6 {
        for k in 1..=3 {
            let model = TableModel::uniform(vec![k; n], 2).unwrap();
            for beam in [1, 2, 5, 1000] {
                let t = run(&model, beam);
                let expected = n as f64 * (k as f64).ln();
                assert!((t.log_partition().unwrap() - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn uniform_backward_of_start_counts_completions() {
    let model = TableModel::uniform(vec![2; 2], 2).unwrap();
    let t = run(&model, 1);
    assert!((t.log_backward(0, 0).unwrap() - 4f64.ln()).abs() < 1e-12);
    assert!((t.log_backward(1, 0).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(t.log_backward(2, 0).unwrap().abs() < 1e-12);
}

#[test]
fn full_width_forward_scores_are_prefix_masses() {
    let model = TableModel::random(vec![2; 3], 2, 2.0, 7).unwrap();
    let t = forward_pass(&model, &model.observations(), RcmsConfig::new(8)).unwrap();
    for position in 0..=3 {
        let level = t.level_nodes(position);
        let mut concrete = 0;
        for index in 0..level.len() {
            let prefix = t.suffix(position, index);
            let got = t.log_forward(position, index);
            if prefix.len() < position {
                // Full width leaves nothing for wildcard contexts to absorb.
                assert_eq!(got, f64::NEG_INFINITY);
                continue;
            }
            let want = prefix_log_score(&model, &prefix);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
            concrete += 1;
        }
        assert_eq!(concrete, 1 << position);
    }
}

#[test]
fn full_width_matches_enumeration() {
    let model = TableModel::random(vec![3; 4], 2, 2.0, 11).unwrap();
    let t = run(&model, 81);
    let oracle = brute_force_oracle(&model, &model.observations(), DEFAULT_ENUMERATION_CAP).unwrap();
    assert!(rel_close(t.log_partition().unwrap(), oracle.log_z, 1e-9));
    for (a, b) in t.marginals().unwrap().iter().zip(&oracle.marginals) {
        for (p, q) in a.iter().zip(b) {
            assert!(rel_close(*p, *q, 1e-9));
        }
    }
    assert_eq!(t.decode().unwrap(), oracle.decode());
}

#[test]
fn single_slot_beam_keeps_one_concrete_context() {
    let model = TableModel::random(vec![4; 6], 3, 1.0, 3).unwrap();
    let t = run(&model, 1);
    for position in 1..=6 {
        let level = t.level(position);
        assert_eq!(level.len(), 2);
        assert!(!level.contexts[0].is_root());
        assert!(level.contexts[1].is_root());
        level.validate().unwrap();
    }
}

#[test]
fn edge_posteriors_sum_to_one() {
    let model = TableModel::random(vec![3, 2, 4, 3, 2], 3, 2.0, 5).unwrap();
    for beam in [1, 2, 3, 7, 500] {
        let t = run(&model, beam);
        let mut sums = [0.0; 6];
        t.edge_posteriors(&model, |e| sums[e.position] += e.mass).unwrap();
        for s in &sums[1..] {
            assert!((s - 1.0).abs() < 1e-12, "beam {beam}: {s}");
        }
    }
}

#[test]
fn inference_is_deterministic() {
    let model = TableModel::random(vec![5; 30], 3, 2.0, 9).unwrap();
    let a = run(&model, 6);
    let b = run(&model, 6);
    assert_eq!(a, b);
    let (mut da, mut db) = (Vec::new(), Vec::new());
    a.dump(&model, &mut da).unwrap();
    b.dump(&model, &mut db).unwrap();
    assert_eq!(da, db);
}

#[test]
fn dump_lists_every_node_and_expansion() {
    let model = TableModel::random(vec![2, 3, 2], 2, 1.0, 4).unwrap();
    let t = run(&model, 2);
    let mut out = Vec::new();
    t.dump(&model, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let (mut nodes, mut edges) = (0, 0);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        match v["kind"].as_str().unwrap() {
            "m" if v["position"] == 0 => {
                let b = v["log_backward"].as_f64().unwrap();
                assert!((b - t.log_partition().unwrap()).abs() < 1e-12);
                nodes += 1;
            }
            "m" => nodes += 1,
            "e" => edges += 1,
            other => panic!("unknown kind {other}"),
        }
    }
    let expected_nodes: usize = t.levels().iter().map(|l| l.len()).sum();
    let expected_edges: usize = (1..=3).map(|i| t.levels()[i - 1].len() * model.sizes()[i - 1]).sum();
    assert_eq!(nodes, expected_nodes);
    assert_eq!(edges, expected_edges);
}

#[test]
fn owner_chain_matches_materialized_levels() {
    let model = TableModel::random(vec![3; 7], 3, 2.0, 21).unwrap();
    let t = run(&model, 4);
    let levels: Vec<Level> = (0..=7).map(|i| t.level(i)).collect();
    for y in assignments(model.sizes()) {
        let owners = t.owners(&y).unwrap();
        for (i, level) in levels.iter().enumerate() {
            assert_eq!(level.locate_owner(&y[..i]).unwrap(), owners[i]);
        }
    }
}

#[test]
fn empty_input_and_bad_beam_are_usage_errors() {
    let model = TableModel::uniform(vec![2; 2], 2).unwrap();
    assert!(forward_pass(&model, &[], RcmsConfig::new(4)).is_err());
    assert!(forward_pass(&model, &model.observations(), RcmsConfig::new(0)).is_err());
    let t = forward_pass(&model, &model.observations(), RcmsConfig::new(4)).unwrap();
    assert!(t.log_partition().is_err());
    assert!(t.owners(&[Label(0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The induced model is a normalized distribution over the whole space,
    /// and the engine's marginals are its marginals.
    #[test]
    fn induced_model_is_normalized_with_full_coverage(seed in any::<u64>(), n in 1usize..=5, order in 1usize..=3, beam in 1usize..=12) {
        let mut r = rng(seed);
        let model = random_model(&mut r, n, 3, order);
        let t = run(&model, beam);
        let mut marginals: Vec<Vec<f64>> = model.sizes().iter().map(|&s| vec![0.0; s]).collect();
        let mut logs = Vec::new();
        for y in assignments(model.sizes()) {
            let q = t.assignment_log_prob(&model, &y).unwrap();
            prop_assert!(q.is_finite());
            for (slot, label) in y.iter().enumerate() {
                marginals[slot][label.index()] += q.exp();
            }
            logs.push(q);
        }
        prop_assert!(log_sum(logs).abs() < 1e-9);
        for (a, b) in t.marginals().unwrap().iter().zip(&marginals) {
            for (p, q) in a.iter().zip(b) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
        let z = t.log_partition().unwrap();
        for m in t.level_log_masses().unwrap() {
            prop_assert!(rel_close(m, z, 1e-9));
        }
    }

    #[test]
    fn merge_conserves_mass_and_levels_validate(seed in any::<u64>(), n in 1usize..=8, order in 1usize..=4, beam in 1usize..=20) {
        let mut r = rng(seed);
        let model = random_model(&mut r, n, 5, order);
        let mut t = Trellis::new(RcmsConfig::new(beam), model.history_window()).unwrap();
        for i in 0..n {
            let stats = t.push_level(&model, ()).unwrap();
            prop_assert!(rel_close(stats.candidate_log_mass, stats.merged_log_mass, 1e-12));
            prop_assert!(t.level(i + 1).validate().is_ok());
            prop_assert!(t.level(i + 1).len() <= beam + 1);
        }
    }
}
