use noisytd_core::analysis::{weak_learning_advantage, AdvantageOptions};
use noisytd_core::cube::all_points;
use noisytd_core::targets::{
    random_monotone_target, tribes, tribes_closed_forms, tribes_params_for, tribes_term_count,
    MonotoneGenerator,
};
use noisytd_core::{ExplicitDist, HypothesisClass, LabeledDistribution};
use proptest::prelude::*;

#[test]
fn tribes_closed_forms_exhaustive() {
    for w in 1..=16usize {
        for s in 1..=16 / w {
            let f = tribes(w, s).unwrap();
            let k = w * s;
            let n = (1u64 << k) as f64;
            let pr_false = (1u64 << k) as f64 - f.count_ones() as f64;
            let cf = tribes_closed_forms(w, s);
            assert!((pr_false / n - cf.pr_false).abs() < 1e-12, "w={w} s={s}");
            // E[x_0 * 1[f = 1]] and E[x_0 * f] over the uniform cube.
            let (mut label, mut signed) = (0.0, 0.0);
            for x in all_points(k) {
                let xi = x.sign(0) as f64;
                let y = f.get(x.bits());
                label += xi * if y { 1.0 } else { 0.0 };
                signed += xi * if y { 1.0 } else { -1.0 };
            }
            assert!((label / n - cf.corr_label).abs() < 1e-12, "w={w} s={s}");
            assert!((signed / n - cf.corr_signed).abs() < 1e-12, "w={w} s={s}");
            assert!(f.is_monotone());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn params_are_maximal(eps in 0.001f64..=1.0 / 3.0, extra in 0usize..20) {
        let d = (1.0 / eps).log2().ceil() as usize + extra;
        let p = tribes_params_for(eps, d).unwrap();
        let pr = |w: usize, s: usize| (1.0 - (-(w as f64)).exp2()).powi(s as i32);
        prop_assert!(p.k <= d);
        prop_assert!(pr(p.w, p.s) >= eps);
        prop_assert!(pr(p.w, p.s + 1) < eps);
        prop_assert_eq!(tribes_term_count(p.w, eps), p.s);
        let s_next = tribes_term_count(p.w + 1, eps);
        prop_assert!(s_next == 0 || (p.w + 1) * s_next > d);
    }

    #[test]
    fn monotone_targets(d in 2usize..=8, s in 2usize..=8, seed in any::<u64>(), read_once in any::<bool>()) {
        let gen = if read_once { MonotoneGenerator::ReadOnceDnf } else { MonotoneGenerator::RejectionSampledTree };
        let t = random_monotone_target(d, s, seed, gen).unwrap();
        prop_assert!(t.table.is_monotone());
        for x in all_points(d) {
            prop_assert_eq!(t.tree.eval(&t.class, x).unwrap().0, t.table.get(x.bits()));
        }
    }
}

#[test]
fn projections_weakly_learn_monotone_trees() {
    for seed in 0..12u64 {
        for s in [2usize, 4, 8, 16] {
            let t = random_monotone_target(8, s, seed, MonotoneGenerator::RejectionSampledTree)
                .unwrap();
            let dist: LabeledDistribution = ExplicitDist::uniform_with(&t.table).unwrap().into();
            let class = HypothesisClass::projections(8);
            let r = weak_learning_advantage(&dist, &class, AdvantageOptions::default()).unwrap();
            let size = t.tree.size().max(2) as f64;
            assert!(
                r.gamma >= 1.0 / size.log2() - 1e-12,
                "seed {seed} s {s}: {}",
                r.gamma
            );
        }
    }
}
