//! Experiment drivers: trials, rows, invariants, and artifacts.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info};
use noisytd_core::adversary::{
    build_lowerbound_instance_with, corrupt_labels_agnostic, corrupt_sample_nasty, shift_mixture,
    CorruptionPlan, NoiseModel,
};
use noisytd_core::analysis::{weak_learning_advantage, AdvantageOptions, OracleRow};
use noisytd_core::impurity::purity_gain;
use noisytd_core::topdown::{progress_audit, sample_size_for, AuditOptions};
use noisytd_core::{
    error_curve, make_explicit, train, EmpiricalDist, ExplicitDist, Hypothesis, HypothesisClass,
    Impurity, ImpurityFn, LabeledDistribution, TrainConfig, TrainTrace,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, GammaSpec, Mode, SizeSpec};
use crate::error::{HarnessError, Result};
use crate::report::{self, InvariantRecord, ReportRow, Summary};
use crate::verify::{self, VerifyOptions};

/// Everything a run produces, before it touches the file system.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    /// Extra files as `(path relative to out.dir, contents)`, sorted by path.
    pub files: Vec<(String, String)>,
}

/// Seed of stream `i` derived from `seed`.
pub fn derive_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn file_stem(name: &str) -> String {
    name.replace('/', "-")
}

#[derive(Default)]
struct TrialOut {
    rows: Vec<ReportRow>,
    invariants: Vec<InvariantRecord>,
    files: Vec<(String, String)>,
}

fn flipped(d: &ExplicitDist) -> Result<ExplicitDist> {
    Ok(make_explicit(
        d.rows()
            .iter()
            .map(|r| (r.point, r.mass, 1.0 - r.rate))
            .collect(),
    )?)
}

fn log_work(name: &str, trial: usize, trace: &TrainTrace) {
    for (i, w) in trace.work.iter().enumerate() {
        debug!("{name} trial {trial} iter {}: {w} evaluations", i + 1);
    }
    info!(
        "{name} trial {trial}: {} splits, {} evaluations",
        trace.steps.len(),
        trace.work.iter().sum::<u64>()
    );
}

struct Trained {
    trace: TrainTrace,
    curve_clean: Vec<f64>,
    curve_train: Vec<f64>,
    wall: f64,
}

fn train_and_curve(
    cfg: &ExperimentConfig,
    tc: &TrainConfig,
    train_dist: &LabeledDistribution,
    clean: &LabeledDistribution,
) -> Result<Trained> {
    let start = Instant::now();
    let (_, trace) = train(train_dist, tc)?;
    let wall = if cfg.wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let curve_clean = error_curve(&trace, &tc.hypotheses, train_dist, clean)?;
    let curve_train = error_curve(&trace, &tc.hypotheses, train_dist, train_dist)?;
    Ok(Trained {
        trace,
        curve_clean,
        curve_train,
        wall,
    })
}

/// Rows at every checkpoint; sizes past the final tree report the final tree.
#[allow(clippy::too_many_arguments)]
fn checkpoint_rows(
    name: &str,
    trial: usize,
    sizes: &[usize],
    eta: f64,
    gamma: f64,
    eps: f64,
    tr: &Trained,
) -> Vec<ReportRow> {
    let last = tr.trace.final_size();
    sizes
        .iter()
        .map(|&s| {
            let at = s.min(last);
            ReportRow {
                experiment: name.to_string(),
                trial,
                t: s,
                eta,
                gamma,
                eps,
                error_clean: tr.curve_clean[at - 1],
                error_corrupted: tr.curve_train[at - 1],
                g_value: tr.trace.g_at(at),
                wall_time: tr.wall,
            }
        })
        .collect()
}

fn exact_gamma(dist: &LabeledDistribution, class: &HypothesisClass) -> Result<f64> {
    Ok(weak_learning_advantage(dist, class, AdvantageOptions::default())?.gamma)
}

fn plan_csv(plan: &CorruptionPlan) -> Result<String> {
    let mut buf = Vec::new();
    plan.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("plan CSV is ASCII"))
}

/// One noisy-boosting trial with impurity `g`.
fn boost_trial(
    cfg: &ExperimentConfig,
    name: &str,
    g: &ImpurityFn,
    trial: usize,
    audit: bool,
) -> Result<TrialOut> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let mut spec = cfg.target.clone();
    spec.seed = cfg.target_seed.unwrap_or_else(|| derive_seed(seed, 1));
    let target = spec.build(cfg.d)?;
    let clean_explicit = cfg.marginal.labeled(&target.table)?;
    let clean: LabeledDistribution = clean_explicit.clone().into();
    let class = HypothesisClass::projections(cfg.d);
    let t = cfg.size_bound(0);
    let mut out = TrialOut::default();
    let stem = format!("{}_trial{trial}", file_stem(name));

    let mut plan = None;
    let train_dist: LabeledDistribution = match cfg.mode {
        Mode::Exact => match cfg.noise {
            None => clean.clone(),
            Some(NoiseModel::ShiftMixture) => {
                let m = shift_mixture(&clean_explicit, &flipped(&clean_explicit)?, cfg.eta)?;
                m.into()
            }
            Some(other) => {
                return Err(HarnessError::Config(format!(
                    "noise.model = {other} needs learner.mode = sample"
                )))
            }
        },
        Mode::Sample => {
            let n = match cfg.n {
                SizeSpec::Fixed(n) => n as u64,
                SizeSpec::Auto => sample_size_for(cfg.tau, t, class.len(), cfg.confidence)?,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
            let source = match cfg.noise {
                Some(NoiseModel::ShiftMixture) => {
                    shift_mixture(&clean_explicit, &flipped(&clean_explicit)?, cfg.eta)?
                }
                _ => clean_explicit.clone(),
            };
            let sample = EmpiricalDist::draw(&source, n, &mut rng)?;
            let adv_seed = derive_seed(seed, 3);
            match cfg.noise {
                Some(NoiseModel::NastySample) => {
                    let (s, p) = corrupt_sample_nasty(&sample, cfg.eta, cfg.strategy, adv_seed)?;
                    plan = Some(p);
                    s.into()
                }
                Some(NoiseModel::AgnosticLabels) => {
                    let (s, p) = corrupt_labels_agnostic(&sample, cfg.eta, cfg.strategy, adv_seed)?;
                    plan = Some(p);
                    s.into()
                }
                _ => sample.into(),
            }
        }
    };

    let gamma = match cfg.gamma {
        GammaSpec::Exact => exact_gamma(&clean, &class)?,
        GammaSpec::Value(v) => v,
        GammaSpec::None => f64::NAN,
    };
    let tc = TrainConfig::new(t, class.clone())
        .with_impurity(*g)
        .with_tie_break(cfg.tie_break);
    let tr = train_and_curve(cfg, &tc, &train_dist, &clean)?;
    log_work(name, trial, &tr.trace);
    let sizes = cfg.checkpoint_sizes(t);
    out.rows = checkpoint_rows(name, trial, &sizes, cfg.eta, gamma, cfg.eps, &tr);

    let in_range = out
        .rows
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.error_clean));
    out.invariants.push(InvariantRecord {
        name: format!("{name}/trial{trial}/error-range"),
        pass: in_range,
        detail: String::new(),
    });

    if audit {
        let a_gamma = if gamma.is_finite() {
            gamma
        } else {
            exact_gamma(&clean, &class)?
        };
        let records = progress_audit(&clean, &tc, a_gamma, 0.0, AuditOptions::default())?;
        let bad: Vec<_> = records.iter().filter(|r| !r.pass).collect();
        out.invariants.push(InvariantRecord {
            name: format!("{name}/trial{trial}/per-split-drop"),
            pass: bad.is_empty(),
            detail: match bad.first() {
                Some(r) => format!("iter {} gain {:e} < bound {:e}", r.iter, r.gain, r.bound),
                None => format!("{} steps", records.len()),
            },
        });
    }

    if cfg.artifacts {
        out.files.push((
            format!("artifacts/{stem}_clean.txt"),
            clean_explicit.to_text(),
        ));
        for &s in &sizes {
            let tree = tr
                .trace
                .tree_at(s.min(tr.trace.final_size()), &class, &train_dist)?;
            out.files
                .push((format!("artifacts/{stem}_t{s}.tree"), tree.to_text()));
        }
    }
    if cfg.plans {
        if let Some(p) = &plan {
            out.files.push((format!("plans/{stem}.csv"), plan_csv(p)?));
        }
    }
    Ok(out)
}

fn run_trials(
    cfg: &ExperimentConfig,
    f: impl Fn(usize) -> Result<TrialOut> + Sync + Send,
) -> Result<Vec<TrialOut>> {
    (0..cfg.trials).into_par_iter().map(f).collect()
}

fn lower_bound(cfg: &ExperimentConfig) -> Result<(TrialOut, BTreeMap<String, f64>)> {
    let gamma = match cfg.gamma {
        GammaSpec::Value(v) => v,
        _ => {
            return Err(HarnessError::Config(
                "lower-bound needs a numeric gamma".into(),
            ))
        }
    };
    let inst = build_lowerbound_instance_with(cfg.d, cfg.eps, gamma, cfg.lowerbound_c)?;
    let name = "lower-bound";
    let t = cfg.size_bound(inst.k);
    let clean: LabeledDistribution = inst.clean.clone().into();
    let mixed: LabeledDistribution = inst.mixed.clone().into();
    let tc = TrainConfig::new(t, inst.class.clone())
        .with_impurity(cfg.impurity)
        .with_tie_break(cfg.tie_break);
    let tr = train_and_curve(cfg, &tc, &mixed, &clean)?;
    log_work(name, 0, &tr.trace);

    let mut out = TrialOut::default();
    let sizes = cfg.checkpoint_sizes(t);
    out.rows = checkpoint_rows(name, 0, &sizes, inst.eta, inst.gamma, cfg.eps, &tr);

    let mut inv = |n: &str, pass: bool, detail: String| {
        out.invariants.push(InvariantRecord {
            name: format!("{name}/{n}"),
            pass,
            detail,
        })
    };
    let r = inst.residual();
    inv("residual", r.abs() <= 1e-14, format!("{r:e}"));
    for g in ImpurityFn::standard() {
        let worst = (0..inst.d)
            .map(|i| {
                purity_gain(&mixed.view(), &Hypothesis::Projection(i), &g).map(|r| r.delta.abs())
            })
            .collect::<noisytd_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        inv(
            &format!("root-gain/{}", g.id()),
            worst <= 1e-12,
            format!("{worst:e}"),
        );
    }
    // Every size the learner reached, then the final tree for the rest of the budget.
    let floor = 2.0 * cfg.eps - 1e-9;
    let min_err = tr.curve_clean.iter().copied().fold(f64::INFINITY, f64::min);
    inv(
        "clean-error-floor",
        min_err >= floor,
        format!("min error {min_err} over t <= {t}"),
    );
    let gamma_star = exact_gamma(&clean, &inst.class)?;
    inv(
        "clean-weak-learnable",
        gamma_star > 0.0,
        format!("{gamma_star}"),
    );

    let mut extra = BTreeMap::new();
    extra.insert("gamma_star".into(), gamma_star);
    extra.insert("v".into(), inst.v);
    extra.insert("eta".into(), inst.eta);
    extra.insert("k".into(), inst.k as f64);
    extra.insert("w".into(), inst.w as f64);
    extra.insert("s".into(), inst.s as f64);
    extra.insert("final_size".into(), tr.trace.final_size() as f64);

    if cfg.artifacts {
        out.files.push((
            "artifacts/lower-bound_clean.txt".into(),
            inst.clean.to_text(),
        ));
        out.files.push((
            "artifacts/lower-bound_mixed.txt".into(),
            inst.mixed.to_text(),
        ));
        for &s in &sizes {
            let tree = tr
                .trace
                .tree_at(s.min(tr.trace.final_size()), &inst.class, &mixed)?;
            out.files.push((
                format!("artifacts/lower-bound_trial0_t{s}.tree"),
                tree.to_text(),
            ));
        }
    }
    if cfg.plans {
        out.files.push((
            "plans/lower-bound_component.txt".into(),
            inst.component.to_text(),
        ));
    }
    Ok((out, extra))
}

fn oracle_csv(rows: &[OracleRow]) -> String {
    let mut s = format!("{}\n", OracleRow::HEADER);
    for r in rows {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

fn lemma_suite(cfg: &ExperimentConfig, opts: VerifyOptions) -> (TrialOut, BTreeMap<String, f64>) {
    let opts = VerifyOptions {
        seed: cfg.seed,
        scale: cfg.suite_scale,
        ..opts
    };
    let results = verify::verify_all(&opts);
    let mut out = TrialOut::default();
    let mut extra = BTreeMap::new();
    let mut oracle_rows = Vec::new();
    for r in &results {
        out.invariants.push(InvariantRecord {
            name: r.name.to_string(),
            pass: r.pass(),
            detail: format!(
                "cases {} failures {} worst {:e}",
                r.cases, r.failures, r.worst
            ),
        });
        extra.insert(format!("{}/cases", r.name), r.cases as f64);
        oracle_rows.extend(r.rows.iter().cloned());
    }
    out.files
        .push(("oracles.csv".into(), oracle_csv(&oracle_rows)));
    (out, extra)
}

/// Runs `cfg`; `opts` carries the impurity used by lemma-suite checks.
pub fn run_with(cfg: &ExperimentConfig, opts: VerifyOptions) -> Result<RunOutput> {
    let (parts, extra) = match cfg.experiment {
        Experiment::BoostNoise => (
            run_trials(cfg, |i| {
                boost_trial(cfg, "boost-noise", &cfg.impurity, i, false)
            })?,
            BTreeMap::new(),
        ),
        Experiment::MonotoneLearn => (
            run_trials(cfg, |i| {
                boost_trial(cfg, "monotone-learn", &cfg.impurity, i, true)
            })?,
            BTreeMap::new(),
        ),
        Experiment::ImpurityCompare => {
            let mut all = Vec::new();
            for g in &cfg.impurities {
                let name = format!("impurity-compare/{}", g.id());
                all.extend(run_trials(cfg, |i| boost_trial(cfg, &name, g, i, false))?);
            }
            (all, BTreeMap::new())
        }
        Experiment::LowerBound => {
            let (o, e) = lower_bound(cfg)?;
            (vec![o], e)
        }
        Experiment::LemmaSuite => {
            let (o, e) = lemma_suite(cfg, opts);
            (vec![o], e)
        }
    };
    let mut rows = Vec::new();
    let mut invariants = Vec::new();
    let mut files = Vec::new();
    for p in parts {
        rows.extend(p.rows);
        invariants.extend(p.invariants);
        files.extend(p.files);
    }
    report::sort_rows(&mut rows);
    files.sort();
    let summary = Summary {
        schema: 1,
        experiment: cfg.experiment.to_string(),
        config: cfg.values.clone(),
        rows: rows.len(),
        series: report::series(&rows),
        invariants,
        extra,
    };
    Ok(RunOutput {
        rows,
        summary,
        files,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_with(cfg, VerifyOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> ExperimentConfig {
        let p: Vec<(String, String)> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        ExperimentConfig::from_pairs(&p, &[]).unwrap()
    }

    #[test]
    fn projection_target_learned_at_two_leaves() {
        let c = cfg(&[
            ("d", "6"),
            ("target.kind", "projection"),
            ("target.coord", "1"),
            ("learner.t", "4"),
        ]);
        let out = run(&c).unwrap();
        let at2 = out.rows.iter().find(|r| r.t == 2).unwrap();
        assert_eq!(at2.error_clean, 0.0);
        assert!(out.summary.failures().is_empty());
    }

    #[test]
    fn seeds_are_distinct_per_stream() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }
}
