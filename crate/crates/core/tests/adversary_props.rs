use noisytd_core::adversary::{
    corrupt_labels_agnostic, corrupt_sample_nasty, edit_budget, Strategy as Adv,
};
use noisytd_core::{BitPoint, EmpiricalDist, Label};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = EmpiricalDist> {
    (1usize..=5).prop_flat_map(|d| {
        prop::collection::vec((0u64..(1 << d), any::<bool>()), 1..200).prop_map(move |recs| {
            EmpiricalDist::from_records(
                d,
                recs.into_iter()
                    .map(|(b, y)| (BitPoint::new(b, d).unwrap(), Label(y))),
            )
            .unwrap()
        })
    })
}

fn strategy() -> impl Strategy<Value = Adv> {
    prop_oneof![
        Just(Adv::RandomReplace),
        Just(Adv::FlipAgreeingLabels),
        Just(Adv::CorrelationCancel)
    ]
}

/// Number of records that must change to turn `a` into `b`.
fn distance(a: &EmpiricalDist, b: &EmpiricalDist) -> u64 {
    let mut over = 0;
    for x in noisytd_core::cube::all_points(a.dim()) {
        for y in [Label::ZERO, Label::ONE] {
            over += a.count(x, y).saturating_sub(b.count(x, y));
        }
    }
    over
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nasty_respects_budget(s in sample(), eta in 0.0f64..0.99, st in strategy(), seed in any::<u64>()) {
        let (out, plan) = corrupt_sample_nasty(&s, eta, st, seed).unwrap();
        let m = edit_budget(eta, s.len()).unwrap();
        prop_assert_eq!(out.len(), s.len());
        prop_assert!(plan.edit_count() <= m);
        prop_assert!(distance(&s, &out) <= plan.edit_count());
        let rows = plan.to_csv().lines().count() as u64 - 1;
        prop_assert_eq!(rows, plan.edit_count());
        let (again, _) = corrupt_sample_nasty(&s, eta, st, seed).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn agnostic_flips_labels_only(s in sample(), eta in 0.0f64..0.99, flip in any::<bool>(), seed in any::<u64>()) {
        let st = if flip { Adv::FlipAgreeingLabels } else { Adv::RandomReplace };
        let (out, plan) = corrupt_labels_agnostic(&s, eta, st, seed).unwrap();
        prop_assert!(plan.labels_only());
        prop_assert!(plan.edit_count() <= edit_budget(eta, s.len()).unwrap());
        for x in noisytd_core::cube::all_points(s.dim()) {
            let before = s.count(x, Label::ZERO) + s.count(x, Label::ONE);
            let after = out.count(x, Label::ZERO) + out.count(x, Label::ONE);
            prop_assert_eq!(before, after);
        }
        // Signed label mean moves by exactly twice the flipped signed mass.
        let mean = |e: &EmpiricalDist| e.cells().iter().map(|c| c.pos as f64 - c.neg as f64).sum::<f64>() / e.len() as f64;
        let flipped: f64 = plan.edits.iter().map(|e| e.count as f64 * e.before.1.signed() as f64).sum();
        prop_assert!((mean(&s) - mean(&out) - 2.0 * flipped / s.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn one_over_n_changes_at_most_one() {
    let s = EmpiricalDist::from_records(
        3,
        (0..10u64).map(|b| (BitPoint::new(b % 8, 3).unwrap(), Label(b % 3 == 0))),
    )
    .unwrap();
    for st in [
        Adv::RandomReplace,
        Adv::FlipAgreeingLabels,
        Adv::CorrelationCancel,
    ] {
        let (_, plan) = corrupt_sample_nasty(&s, 0.1, st, 5).unwrap();
        assert!(plan.edit_count() <= 1);
    }
}

#[test]
fn correlation_cancel_rejected_for_agnostic() {
    let s = EmpiricalDist::from_records(1, [(BitPoint::new(0, 1).unwrap(), Label::ONE)]).unwrap();
    assert!(corrupt_labels_agnostic(&s, 0.5, Adv::CorrelationCancel, 0).is_err());
}
