mod common;

use noisytd_core::adversary::shift_mixture;
use noisytd_core::analysis::{tv_distance, weak_learning_advantage, AdvantageOptions};
use noisytd_core::topdown::{evaluate_error, progress_audit, AuditOptions};
use noisytd_core::{
    train, HypothesisClass, ImpurityFn, LabeledDistribution, TieBreak, TrainConfig,
};
use proptest::prelude::*;

fn tie_breaks() -> impl Strategy<Value = TieBreak> {
    prop_oneof![
        Just(TieBreak::LowestIndexFirst),
        Just(TieBreak::HighestIndexFirst),
        any::<u64>().prop_map(TieBreak::SeededRandom),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn potential_drops_by_chosen_gain(dist in common::labeled(1, 6), t in 1usize..20, tb in tie_breaks(), gi in 0usize..3) {
        let class = HypothesisClass::projections(dist.dim());
        let cfg = TrainConfig::new(t, class.clone())
            .with_impurity(ImpurityFn::standard()[gi])
            .with_tie_break(tb);
        let (tree, trace) = train(&dist, &cfg).unwrap();
        prop_assert!(tree.size() <= t);
        prop_assert!(trace.err_initial <= trace.g_initial + 1e-12);
        for s in &trace.steps {
            prop_assert!((s.g_before - s.g_after - s.weighted_gain).abs() < 1e-10);
            prop_assert!(s.err_after <= s.g_after + 1e-12);
        }
        let err = evaluate_error(&tree, &class, &dist).unwrap();
        prop_assert!((err - trace.err_at(tree.size())).abs() < 1e-12);
        let (tree2, trace2) = train(&dist, &cfg).unwrap();
        prop_assert_eq!(tree, tree2);
        prop_assert_eq!(trace, trace2);
    }

    #[test]
    fn noiseless_progress(dist in common::deterministic(2, 5), t in 2usize..12) {
        let class = HypothesisClass::projections(dist.dim());
        let gamma = weak_learning_advantage(&dist, &class, AdvantageOptions::default()).unwrap().gamma;
        prop_assume!(gamma > 0.0);
        let cfg = TrainConfig::new(t, class);
        for r in progress_audit(&dist, &cfg, gamma, 0.0, AuditOptions::default()).unwrap() {
            prop_assert!(r.pass, "{:?}", r);
        }
    }

    #[test]
    fn shift_moves_error_by_at_most_tv(
        a in common::explicit(3, 3),
        b in common::explicit(3, 3),
        eta in 0.0f64..0.9,
        t in 1usize..8,
    ) {
        let mixed = shift_mixture(&a, &b, eta).unwrap();
        let (clean, noisy): (LabeledDistribution, LabeledDistribution) = (a.into(), mixed.into());
        let tv = tv_distance(&clean, &noisy).unwrap();
        prop_assert!(tv <= eta + 1e-12);
        let class = HypothesisClass::projections(3);
        let (tree, _) = train(&noisy, &TrainConfig::new(t, class.clone())).unwrap();
        let gap = evaluate_error(&tree, &class, &clean).unwrap() - evaluate_error(&tree, &class, &noisy).unwrap();
        prop_assert!(gap.abs() <= tv + 1e-12);
    }
}
