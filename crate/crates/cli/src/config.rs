//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use noisytd_core::adversary::{NoiseModel, Strategy};
use noisytd_core::analysis::ProductDistribution;
use noisytd_core::targets::TargetSpec;
use noisytd_core::{ImpurityFn, TieBreak};

use crate::error::{HarnessError, Result};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "experiment",
        "boost-noise",
        "boost-noise | lower-bound | impurity-compare | lemma-suite | monotone-learn",
    ),
    ("seed", "0", "master seed; trial seeds are derived from it"),
    ("trials", "1", "number of independent trials"),
    ("d", "10", "dimension"),
    ("eps", "0.1", "target error"),
    (
        "gamma",
        "auto",
        "auto | exact | none | <float>; auto is exact except 0.3 for lower-bound",
    ),
    (
        "target.kind",
        "random-monotone-dt",
        "random-monotone-dt | read-once-dnf | tribes | projection | majority",
    ),
    ("target.size", "8", "leaf count for tree targets"),
    (
        "target.generator",
        "rejection-sampled-tree",
        "rejection-sampled-tree | read-once-dnf",
    ),
    ("target.w", "2", "Tribes term width"),
    ("target.s", "2", "Tribes term count"),
    ("target.coord", "0", "projection coordinate"),
    ("target.k", "3", "majority arity"),
    ("target.seed", "auto", "auto (per trial) | <u64>"),
    ("marginal", "uniform", "uniform | product:p0,p1,..."),
    ("noise.model", "none", "none | nasty | agnostic | shift"),
    ("noise.eta", "0", "corruption budget in [0,1)"),
    (
        "noise.strategy",
        "random-replace",
        "random-replace | flip-agreeing-labels | correlation-cancel",
    ),
    (
        "learner.impurity",
        "gini",
        "gini | entropy | kmsqrt | concave:<kappa>",
    ),
    (
        "learner.impurities",
        "gini,entropy,kmsqrt",
        "impurities compared by impurity-compare",
    ),
    (
        "learner.t",
        "64",
        "leaf budget; auto gives 2^(d-k) for lower-bound",
    ),
    (
        "learner.tie_break",
        "auto",
        "auto | lowest | highest | random:<seed>; auto is highest for lower-bound",
    ),
    ("learner.mode", "exact", "exact | sample"),
    (
        "learner.n",
        "auto",
        "sample size; auto uses the tolerance formula",
    ),
    ("learner.tau", "0.05", "gain tolerance for learner.n = auto"),
    (
        "learner.confidence",
        "0.9",
        "confidence for learner.n = auto",
    ),
    ("lowerbound.c", "1", "junta width constant"),
    ("suite.scale", "1", "case-count multiplier for lemma-suite"),
    (
        "report.checkpoints",
        "auto",
        "auto (powers of two and t) | comma list of sizes",
    ),
    ("report.wall_time", "false", "record training wall time"),
    ("out.dir", "out", "output directory"),
    (
        "out.artifacts",
        "false",
        "write trees and clean distributions per trial",
    ),
    (
        "out.plans",
        "false",
        "write corruption plans (one CSV line per edited record)",
    ),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    BoostNoise,
    LowerBound,
    ImpurityCompare,
    LemmaSuite,
    MonotoneLearn,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::BoostNoise => "boost-noise",
            Experiment::LowerBound => "lower-bound",
            Experiment::ImpurityCompare => "impurity-compare",
            Experiment::LemmaSuite => "lemma-suite",
            Experiment::MonotoneLearn => "monotone-learn",
        })
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "boost-noise" => Experiment::BoostNoise,
            "lower-bound" => Experiment::LowerBound,
            "impurity-compare" => Experiment::ImpurityCompare,
            "lemma-suite" => Experiment::LemmaSuite,
            "monotone-learn" => Experiment::MonotoneLearn,
            _ => return Err(HarnessError::Config(format!("unknown experiment `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaSpec {
    Exact,
    None,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeSpec {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: usize,
    pub d: usize,
    pub eps: f64,
    pub gamma: GammaSpec,
    pub target: TargetSpec,
    /// `None` derives the target seed from each trial seed.
    pub target_seed: Option<u64>,
    pub marginal: ProductDistribution,
    pub noise: Option<NoiseModel>,
    pub eta: f64,
    pub strategy: Strategy,
    pub impurity: ImpurityFn,
    pub impurities: Vec<ImpurityFn>,
    pub t: SizeSpec,
    pub tie_break: TieBreak,
    pub mode: Mode,
    pub n: SizeSpec,
    pub tau: f64,
    pub confidence: f64,
    pub lowerbound_c: f64,
    pub suite_scale: f64,
    pub checkpoints: Option<Vec<usize>>,
    pub wall_time: bool,
    pub out_dir: PathBuf,
    pub artifacts: bool,
    pub plans: bool,
    /// Every key with its effective value.
    pub values: BTreeMap<String, String>,
}

fn cfg_err(key: &str, v: &str) -> HarnessError {
    HarnessError::Config(format!("invalid value `{v}` for `{key}`"))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(key, v))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("line {}: expected key = value", no + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Defaults, then `file` pairs, then `overrides`; later values win.
    pub fn from_pairs(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, v, _)| (k.to_string(), v.to_string()))
            .collect();
        let mut seen = std::collections::BTreeSet::new();
        for (k, _) in file {
            if !seen.insert(k.clone()) {
                return Err(HarnessError::Config(format!("duplicate key `{k}`")));
            }
        }
        for (k, v) in file.iter().chain(overrides) {
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => return Err(HarnessError::Config(format!("unknown key `{k}`"))),
            }
        }
        Self::from_values(values)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_pairs(&parse_pairs(&text)?, overrides)
    }

    pub fn defaults() -> Self {
        Self::from_pairs(&[], &[]).expect("defaults are valid")
    }

    fn from_values(values: BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| values[k].as_str();
        let experiment: Experiment = get("experiment").parse()?;
        let d: usize = parse("d", get("d"))?;
        if d == 0 || d > noisytd_core::cube::MAX_EXPLICIT_DIM {
            return Err(cfg_err("d", get("d")));
        }
        let gamma = match get("gamma") {
            "auto" if experiment == Experiment::LowerBound => GammaSpec::Value(0.3),
            "auto" | "exact" => GammaSpec::Exact,
            "none" => GammaSpec::None,
            v => GammaSpec::Value(parse("gamma", v)?),
        };
        let mut target_pairs: BTreeMap<String, String> = values
            .iter()
            .filter(|(k, _)| k.starts_with("target."))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let target_seed = match get("target.seed") {
            "auto" => {
                target_pairs.insert("target.seed".into(), "0".into());
                None
            }
            v => Some(parse("target.seed", v)?),
        };
        let target = TargetSpec::from_pairs(&target_pairs)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let marginal = match get("marginal") {
            "uniform" => ProductDistribution::uniform(d),
            v => {
                let list = v
                    .strip_prefix("product:")
                    .ok_or_else(|| cfg_err("marginal", v))?;
                let p = list
                    .split(',')
                    .map(|x| parse::<f64>("marginal", x.trim()))
                    .collect::<Result<Vec<_>>>()?;
                if p.len() != d {
                    return Err(HarnessError::Config(format!(
                        "marginal has {} coordinates, d = {d}",
                        p.len()
                    )));
                }
                ProductDistribution::new(p).map_err(|_| cfg_err("marginal", v))?
            }
        };
        let noise = match get("noise.model") {
            "none" => None,
            v => Some(v.parse().map_err(|_| cfg_err("noise.model", v))?),
        };
        let eta: f64 = parse("noise.eta", get("noise.eta"))?;
        if !(0.0..1.0).contains(&eta) {
            return Err(cfg_err("noise.eta", get("noise.eta")));
        }
        let strategy = get("noise.strategy")
            .parse()
            .map_err(|_| cfg_err("noise.strategy", get("noise.strategy")))?;
        let impurity = parse("learner.impurity", get("learner.impurity"))?;
        let impurities = get("learner.impurities")
            .split(',')
            .map(|s| parse("learner.impurities", s.trim()))
            .collect::<Result<Vec<ImpurityFn>>>()?;
        let t = match get("learner.t") {
            "auto" => SizeSpec::Auto,
            v => SizeSpec::Fixed(parse("learner.t", v)?),
        };
        if t == SizeSpec::Auto && experiment != Experiment::LowerBound {
            return Err(cfg_err("learner.t", "auto"));
        }
        if t == SizeSpec::Fixed(0) {
            return Err(cfg_err("learner.t", "0"));
        }
        let tie_break = match get("learner.tie_break") {
            "auto" if experiment == Experiment::LowerBound => TieBreak::HighestIndexFirst,
            "auto" => TieBreak::LowestIndexFirst,
            v => parse("learner.tie_break", v)?,
        };
        let mode = match get("learner.mode") {
            "exact" => Mode::Exact,
            "sample" => Mode::Sample,
            v => return Err(cfg_err("learner.mode", v)),
        };
        let n = match get("learner.n") {
            "auto" => SizeSpec::Auto,
            v => SizeSpec::Fixed(parse("learner.n", v)?),
        };
        let checkpoints = match get("report.checkpoints") {
            "auto" => None,
            v => Some(
                v.split(',')
                    .map(|x| parse("report.checkpoints", x.trim()))
                    .collect::<Result<Vec<usize>>>()?,
            ),
        };
        if matches!(
            noise,
            Some(NoiseModel::NastySample | NoiseModel::AgnosticLabels)
        ) && mode == Mode::Exact
        {
            return Err(HarnessError::Config(
                "sample-level noise needs learner.mode = sample".into(),
            ));
        }
        let trials: usize = parse("trials", get("trials"))?;
        if trials == 0 {
            return Err(cfg_err("trials", "0"));
        }
        Ok(Self {
            experiment,
            seed: parse("seed", get("seed"))?,
            trials,
            d,
            eps: parse("eps", get("eps"))?,
            gamma,
            target,
            target_seed,
            marginal,
            noise,
            eta,
            strategy,
            impurity,
            impurities,
            t,
            tie_break,
            mode,
            n,
            tau: parse("learner.tau", get("learner.tau"))?,
            confidence: parse("learner.confidence", get("learner.confidence"))?,
            lowerbound_c: parse("lowerbound.c", get("lowerbound.c"))?,
            suite_scale: parse("suite.scale", get("suite.scale"))?,
            checkpoints,
            wall_time: parse("report.wall_time", get("report.wall_time"))?,
            out_dir: PathBuf::from(get("out.dir")),
            artifacts: parse("out.artifacts", get("out.artifacts"))?,
            plans: parse("out.plans", get("out.plans"))?,
            values,
        })
    }

    /// Leaf budget; `k` is the junta size for the lower-bound experiment.
    pub fn size_bound(&self, k: usize) -> usize {
        match self.t {
            SizeSpec::Fixed(t) => t,
            SizeSpec::Auto => 1 << (self.d - k),
        }
    }

    /// Sizes at which rows are emitted, ascending, capped at `t`.
    pub fn checkpoint_sizes(&self, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = match &self.checkpoints {
            Some(list) => list.iter().copied().filter(|&s| s >= 1 && s <= t).collect(),
            None => std::iter::successors(Some(1usize), |s| s.checked_mul(2))
                .take_while(|&s| s < t)
                .chain([t])
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}
