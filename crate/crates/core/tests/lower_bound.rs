use noisytd_core::adversary::{build_lowerbound_instance, explicit_covariances};
use noisytd_core::analysis::{
    restriction_from_index, tv_distance, weak_learning_advantage, AdvantageOptions, Witness,
};
use noisytd_core::dist::{condition, Constraint};
use noisytd_core::impurity::purity_gain;
use noisytd_core::targets::{tribes, tribes_closed_forms};
use noisytd_core::{
    ExplicitDist, Hypothesis, HypothesisClass, ImpurityFn, LabeledDistribution, Restriction,
};

#[test]
fn instance_invariants() {
    for (d, eps, gamma) in [
        (12, 0.1, 0.3),
        (8, 0.1, 0.3),
        (10, 0.05, 0.25),
        (16, 0.05, 0.2),
    ] {
        let lb = build_lowerbound_instance(d, eps, gamma).unwrap();
        assert!(lb.residual().abs() < 1e-14);
        assert!(lb.eta <= lb.v);
        assert!((lb.v - tribes_closed_forms(lb.w, lb.s).corr_signed).abs() < 1e-15);
        for c in explicit_covariances(&lb.mixed) {
            assert!(c.abs() < 1e-12, "d={d}: cov {c}");
        }
        let ones = lb.junta.count_ones() as f64 / (1u64 << lb.k) as f64;
        assert!(ones.min(1.0 - ones) >= 2.0 * eps);
        let (clean, mixed): (LabeledDistribution, LabeledDistribution) =
            (lb.clean.clone().into(), lb.mixed.clone().into());
        assert!(tv_distance(&clean, &mixed).unwrap() <= lb.eta + 1e-12);
    }
}

#[test]
fn root_gains_vanish_for_every_impurity() {
    let lb = build_lowerbound_instance(12, 0.1, 0.3).unwrap();
    let dist: LabeledDistribution = lb.mixed.into();
    for g in ImpurityFn::standard() {
        for i in 0..12 {
            let r = purity_gain(&dist.view(), &Hypothesis::Projection(i), &g).unwrap();
            assert!(r.delta.abs() < 1e-12, "{g} x{i}: {}", r.delta);
        }
    }
}

#[test]
fn gains_vanish_under_irrelevant_restrictions() {
    let lb = build_lowerbound_instance(8, 0.1, 0.3).unwrap();
    let (d, k) = (lb.d, lb.k);
    let dist: LabeledDistribution = lb.mixed.into();
    let g = ImpurityFn::gini();
    let free = d - k;
    for idx in 0..3u64.pow(free as u32) {
        let rho = restriction_from_index(free, idx);
        let path: Vec<Constraint> = (0..free)
            .filter_map(|j| rho.value(j).map(|b| Constraint::coordinate(k + j, b)))
            .collect();
        let view = condition(&dist, &path).unwrap();
        for i in 0..d {
            let r = purity_gain(&view, &Hypothesis::Projection(i), &g).unwrap();
            assert!(r.delta.abs() < 1e-12, "{rho} x{i}: {}", r.delta);
        }
    }
}

#[test]
fn covariances_vanish_on_every_irrelevant_restriction_at_d12() {
    let lb = build_lowerbound_instance(12, 0.1, 0.3).unwrap();
    let dist: LabeledDistribution = lb.mixed.into();
    let r = weak_learning_advantage(&dist, &lb.class, AdvantageOptions::default()).unwrap();
    let k = lb.k as u64;
    // Indices whose first k digits are all free.
    let tail = 3u64.pow((12 - k) as u32);
    let head = 3u64.pow(k as u32) - 1;
    for z in 0..tail {
        let ratio = r.ratios[(head * tail + z) as usize];
        assert!(
            ratio.is_nan() || ratio < 1e-9,
            "{}: {ratio}",
            restriction_from_index(12, head * tail + z)
        );
    }
}

#[test]
fn leaves_over_irrelevant_coordinates_keep_bias() {
    let lb = build_lowerbound_instance(12, 0.1, 0.3).unwrap();
    let low = (1u64 << lb.k) - 1;
    for z in 0..1u64 << (12 - lb.k) {
        let (mut w, mut pos) = (0.0, 0.0);
        for j in 0..=low {
            let row = lb.clean.rows()[((z << lb.k) | j) as usize];
            w += row.mass;
            pos += row.mass * row.rate;
        }
        let p = pos / w;
        assert!(p.min(1.0 - p) >= 2.0 * 0.1 - 1e-12);
    }
}

#[test]
fn clean_advantage_is_positive() {
    let lb = build_lowerbound_instance(12, 0.1, 0.3).unwrap();
    let dist: LabeledDistribution = lb.clean.into();
    let r = weak_learning_advantage(
        &dist,
        &HypothesisClass::projections(12),
        AdvantageOptions::default(),
    )
    .unwrap();
    assert!(r.gamma > 0.0);
}

#[test]
fn tribes_one_three_advantage_is_four_sevenths() {
    let f = tribes(1, 3).unwrap();
    let dist: LabeledDistribution = ExplicitDist::uniform_with(&f).unwrap().into();
    let r = weak_learning_advantage(
        &dist,
        &HypothesisClass::projections(3),
        AdvantageOptions::default(),
    )
    .unwrap();
    assert!((r.gamma - 4.0 / 7.0).abs() < 1e-15);
    assert_eq!(
        r.witness,
        Some(Witness::Restriction(Restriction::parse("***").unwrap()))
    );
}
