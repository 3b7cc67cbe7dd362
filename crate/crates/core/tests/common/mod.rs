#![allow(dead_code)]

use noisytd_core::dist::make_explicit;
use noisytd_core::{BitPoint, ExplicitDist, LabeledDistribution};
use proptest::prelude::*;

/// Raw weights and rates; rates snap to 0 or 1 a third of the time.
pub fn raw_table(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    let rate = prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0];
    prop::collection::vec((0.01f64..1.0, rate), 1usize << d)
}

pub fn explicit_from(d: usize, raw: &[(f64, f64)]) -> ExplicitDist {
    let total: f64 = raw.iter().map(|r| r.0).sum();
    make_explicit(
        raw.iter()
            .enumerate()
            .map(|(b, &(m, r))| (BitPoint::new(b as u64, d).unwrap(), m / total, r))
            .collect(),
    )
    .unwrap()
}

/// Random explicit distribution with `d` in `lo..=hi`.
pub fn explicit(lo: usize, hi: usize) -> impl Strategy<Value = ExplicitDist> {
    (lo..=hi).prop_flat_map(|d| raw_table(d).prop_map(move |raw| explicit_from(d, &raw)))
}

pub fn labeled(lo: usize, hi: usize) -> impl Strategy<Value = LabeledDistribution> {
    explicit(lo, hi).prop_map(LabeledDistribution::from)
}

/// Random explicit distribution with deterministic labels.
pub fn deterministic(lo: usize, hi: usize) -> impl Strategy<Value = LabeledDistribution> {
    (lo..=hi)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(0.01f64..1.0, 1usize << d),
                prop::collection::vec(any::<bool>(), 1usize << d),
            )
                .prop_map(move |(m, y)| {
                    let raw: Vec<(f64, f64)> = m
                        .iter()
                        .zip(&y)
                        .map(|(&m, &y)| (m, if y { 1.0 } else { 0.0 }))
                        .collect();
                    explicit_from(d, &raw)
                })
        })
        .prop_map(LabeledDistribution::from)
}
