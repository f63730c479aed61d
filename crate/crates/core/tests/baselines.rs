mod common;

use common::*;
use proptest::prelude::*;
use rcms_core::baselines::{
    beam_search, brute_force_oracle, exact_forward_backward, hybrid_union, DEFAULT_ENUMERATION_CAP,
    DEFAULT_STATE_CAP,
};
use rcms_core::engine::{infer, RcmsConfig};
use rcms_core::model::TableModel;

#[test]
fn beam_drops_assignments_that_rcms_keeps() {
    let model = TableModel::random(vec![3; 5], 2, 2.0, 1).unwrap();
    let obs = model.observations();
    let beam = beam_search(&model, &obs, 1).unwrap();
    let trellis = infer(&model, &obs, RcmsConfig::new(1)).unwrap();
    let all = assignments(model.sizes());
    assert!(all.iter().any(|y| !beam.contains(y)));
    for y in &all {
        assert!(trellis.assignment_log_prob(&model, y).unwrap().is_finite());
    }
}

#[test]
fn exact_agrees_with_enumeration_across_orders() {
    for order in 1..=4 {
        let model = TableModel::random(vec![2, 3, 2, 3, 2], order, 2.0, order as u64).unwrap();
        let obs = model.observations();
        let exact = exact_forward_backward(&model, &obs, DEFAULT_STATE_CAP).unwrap();
        let oracle = brute_force_oracle(&model, &obs, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(rel_close(exact.log_z, oracle.log_z, 1e-12));
        assert_eq!(exact.decode(), oracle.decode());
    }
}

#[test]
fn hybrid_with_same_criterion_is_beam() {
    let model = TableModel::random(vec![4; 6], 2, 2.0, 2).unwrap();
    let obs = model.observations();
    let beam = beam_search(&model, &obs, 3).unwrap();
    let hybrid = hybrid_union(&model, &model, &obs, 3).unwrap();
    assert!(rel_close(beam.log_z, hybrid.log_z, 1e-12));
    assert_eq!(beam.assignments(), hybrid.assignments());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn approximate_normalizers_never_exceed_exact(seed in any::<u64>(), n in 1usize..=6, order in 1usize..=3, beam in 1usize..=10) {
        let mut r = rng(seed);
        let model = random_model(&mut r, n, 4, order);
        let obs = model.observations();
        let exact = exact_forward_backward(&model, &obs, DEFAULT_STATE_CAP).unwrap();
        let b = beam_search(&model, &obs, beam).unwrap();
        prop_assert!(b.log_z <= exact.log_z + 1e-12 * exact.log_z.abs().max(1.0));
        let full = beam_search(&model, &obs, space(&model)).unwrap();
        prop_assert!(rel_close(full.log_z, exact.log_z, 1e-9) || (full.log_z - exact.log_z).abs() < 1e-12);
        let t = infer(&model, &obs, RcmsConfig::new(space(&model))).unwrap();
        prop_assert!((t.log_partition().unwrap() - exact.log_z).abs() <= 1e-9 * exact.log_z.abs().max(1.0));
    }
}
