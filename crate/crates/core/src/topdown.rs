//! Greedy top-down tree growth: repeatedly split the (leaf, hypothesis)
//! pair with the largest weighted purity gain.

use std::fmt::Write as _;

use crate::cube::Label;
use crate::dist::LabeledDistribution;
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::impurity::{gain_from_stats, GainReport, Impurity, ImpurityFn, SplitStats, DROP_TOL};
use crate::tree::DecisionTree;

/// Resolution of equal-gain candidates. The index policies take older
/// leaves first and order hypotheses within a leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    LowestIndexFirst,
    HighestIndexFirst,
    /// Pseudo-random but fixed priority per (leaf, hypothesis), across leaves.
    SeededRandom(u64),
}

impl std::str::FromStr for TieBreak {
    type Err = Error;

    /// `lowest | highest | random:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lowest" => Ok(TieBreak::LowestIndexFirst),
            "highest" => Ok(TieBreak::HighestIndexFirst),
            other => other
                .strip_prefix("random:")
                .and_then(|v| v.parse().ok())
                .map(TieBreak::SeededRandom)
                .ok_or_else(|| Error::OutOfRange(format!("unknown tie-break `{other}`"))),
        }
    }
}

impl std::fmt::Display for TieBreak {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TieBreak::LowestIndexFirst => f.write_str("lowest"),
            TieBreak::HighestIndexFirst => f.write_str("highest"),
            TieBreak::SeededRandom(s) => write!(f, "random:{s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Target leaf count `t`.
    pub size_bound: usize,
    pub impurity: ImpurityFn,
    pub hypotheses: HypothesisClass,
    pub tie_break: TieBreak,
    /// Candidates within this much of the best weighted gain are tied.
    pub min_gain: f64,
}

impl TrainConfig {
    pub fn new(size_bound: usize, hypotheses: HypothesisClass) -> Self {
        Self {
            size_bound,
            impurity: ImpurityFn::gini(),
            hypotheses,
            tie_break: TieBreak::LowestIndexFirst,
            min_gain: 1e-12,
        }
    }

    pub fn with_impurity(mut self, g: ImpurityFn) -> Self {
        self.impurity = g;
        self
    }

    pub fn with_tie_break(mut self, tb: TieBreak) -> Self {
        self.tie_break = tb;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub iter: usize,
    /// Node id of the split leaf.
    pub leaf_id: usize,
    /// `(hypothesis, branch)` constraints from the root to the split leaf.
    pub path: Vec<(usize, bool)>,
    pub hyp_id: usize,
    pub weighted_gain: f64,
    /// Leaf count before the split.
    pub leaves_before: usize,
    pub g_before: f64,
    pub g_after: f64,
    pub err_before: f64,
    pub err_after: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub steps: Vec<TraceStep>,
    /// `G_D(T)` and error of the single-leaf tree.
    pub g_initial: f64,
    pub err_initial: f64,
    /// Candidate (cell, hypothesis) evaluations performed per iteration.
    pub work: Vec<u64>,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iter,leaf_id,hyp_id,weighted_gain,g_before,g_after,err_before,err_after\n",
        );
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{:e}",
                s.iter,
                s.leaf_id,
                s.hyp_id,
                s.weighted_gain,
                s.g_before,
                s.g_after,
                s.err_before,
                s.err_after
            );
        }
        out
    }

    /// Final leaf count.
    pub fn final_size(&self) -> usize {
        self.steps.len() + 1
    }

    /// `G_D(T)` when the tree had `size` leaves.
    pub fn g_at(&self, size: usize) -> f64 {
        match size {
            0 | 1 => self.g_initial,
            s => self.steps[(s - 2).min(self.steps.len() - 1)].g_after,
        }
    }

    pub fn err_at(&self, size: usize) -> f64 {
        match size {
            0 | 1 => self.err_initial,
            s => self.steps[(s - 2).min(self.steps.len() - 1)].err_after,
        }
    }

    /// Tree after the first `size - 1` splits, leaves relabeled by majority on `dist`.
    pub fn tree_at(
        &self,
        size: usize,
        class: &HypothesisClass,
        dist: &LabeledDistribution,
    ) -> Result<DecisionTree> {
        let mut tree = DecisionTree::leaf(Label::ZERO);
        for s in self.steps.iter().take(size.saturating_sub(1)) {
            tree.split_leaf(s.leaf_id, s.hyp_id)?;
        }
        tree.relabel_majority(class, dist)?;
        Ok(tree)
    }
}

struct Leaf {
    node: usize,
    path: Vec<(usize, bool)>,
    cells: Vec<u32>,
    neg: f64,
    pos: f64,
    gains: Vec<(GainReport, bool)>,
}

impl Leaf {
    fn mu(&self) -> f64 {
        self.pos / (self.neg + self.pos)
    }

    fn is_pure(&self) -> bool {
        self.neg == 0.0 || self.pos == 0.0
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ordering key among tied candidates; smaller wins.
fn tie_key(tb: TieBreak, node: usize, hyp: usize) -> (usize, u64) {
    match tb {
        TieBreak::LowestIndexFirst => (node, hyp as u64),
        TieBreak::HighestIndexFirst => (node, u64::MAX - hyp as u64),
        TieBreak::SeededRandom(seed) => (
            0,
            splitmix(seed ^ splitmix((node as u64) << 32 ^ hyp as u64)),
        ),
    }
}

struct Grower<'a> {
    dist: &'a LabeledDistribution,
    class: &'a HypothesisClass,
    g: &'a dyn Impurity,
    total: f64,
}

impl Grower<'_> {
    fn leaf(&self, node: usize, path: Vec<(usize, bool)>, cells: Vec<u32>) -> (Leaf, u64) {
        let m = self.class.len();
        let mut stats = vec![SplitStats::default(); m];
        let (mut neg, mut pos) = (0.0, 0.0);
        for &c in &cells {
            let x = self.dist.point(c as usize);
            let (a, b) = self.dist.masses(c as usize);
            neg += a;
            pos += b;
            for (h, s) in stats.iter_mut().enumerate() {
                if self.class.eval(h, x) {
                    s.neg1 += a;
                    s.pos1 += b;
                } else {
                    s.neg0 += a;
                    s.pos0 += b;
                }
            }
        }
        let gains = stats
            .iter()
            .map(|s| (gain_from_stats(s, self.total, self.g), s.admissible()))
            .collect();
        let work = cells.len() as u64 * m as u64;
        (
            Leaf {
                node,
                path,
                cells,
                neg,
                pos,
                gains,
            },
            work,
        )
    }

    /// `(G_D(T), error_D(T))` of the majority-labeled leaves.
    fn potential(&self, leaves: &[Leaf]) -> (f64, f64) {
        let (mut gsum, mut err) = (0.0, 0.0);
        for l in leaves {
            let w = l.neg + l.pos;
            if w == 0.0 {
                continue;
            }
            gsum += w / self.total * self.g.value(l.mu());
            err += if l.mu() > 0.5 { l.neg } else { l.pos } / self.total;
        }
        (gsum, err)
    }
}

/// Grows a tree with at most `cfg.size_bound` leaves.
///
/// Splits whose branch would be empty are never taken. Growth stops early
/// when every leaf is pure or no leaf admits a split.
pub fn train(dist: &LabeledDistribution, cfg: &TrainConfig) -> Result<(DecisionTree, TrainTrace)> {
    let class = &cfg.hypotheses;
    if class.is_empty() {
        return Err(Error::EmptyHypothesisClass);
    }
    check_dim(class.dim(), dist.dim())?;
    if cfg.size_bound == 0 {
        return Err(Error::OutOfRange("size bound must be at least 1".into()));
    }
    let total = dist.total();
    if dist.cell_count() == 0 || total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    let grower = Grower {
        dist,
        class,
        g: &cfg.impurity,
        total,
    };
    let mut tree = DecisionTree::leaf(Label::ZERO);
    let all: Vec<u32> = (0..dist.cell_count() as u32).collect();
    let (root, w0) = grower.leaf(0, Vec::new(), all);
    let mut leaves = vec![root];
    let (g_initial, err_initial) = grower.potential(&leaves);
    let mut trace = TrainTrace {
        steps: Vec::new(),
        g_initial,
        err_initial,
        work: vec![w0],
    };
    let (mut g_cur, mut err_cur) = (g_initial, err_initial);

    while leaves.len() < cfg.size_bound {
        if leaves.iter().all(Leaf::is_pure) {
            break;
        }
        let best = leaves
            .iter()
            .flat_map(|l| l.gains.iter())
            .filter(|(_, ok)| *ok)
            .map(|(r, _)| r.weighted_delta)
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            break;
        }
        let mut pick: Option<((usize, u64), usize, usize)> = None;
        for (li, l) in leaves.iter().enumerate() {
            for (h, (r, ok)) in l.gains.iter().enumerate() {
                if *ok && r.weighted_delta >= best - cfg.min_gain {
                    let key = tie_key(cfg.tie_break, l.node, h);
                    if pick.is_none_or(|(k, _, _)| key < k) {
                        pick = Some((key, li, h));
                    }
                }
            }
        }
        let (_, li, hyp) = pick.expect("best candidate exists");
        let leaf = leaves.remove(li);
        let gain = leaf.gains[hyp].0.weighted_delta;
        let (z, o) = tree.split_leaf(leaf.node, hyp)?;
        let (mut c0, mut c1) = (Vec::new(), Vec::new());
        for &c in &leaf.cells {
            if class.eval(hyp, dist.point(c as usize)) {
                c1.push(c);
            } else {
                c0.push(c);
            }
        }
        let mut p0 = leaf.path.clone();
        p0.push((hyp, false));
        let mut p1 = leaf.path.clone();
        p1.push((hyp, true));
        let (l0, w_0) = grower.leaf(z, p0, c0);
        let (l1, w_1) = grower.leaf(o, p1, c1);
        leaves.push(l0);
        leaves.push(l1);
        trace.work.push(w_0 + w_1);
        let (g_new, err_new) = grower.potential(&leaves);
        trace.steps.push(TraceStep {
            iter: trace.steps.len() + 1,
            leaf_id: leaf.node,
            path: leaf.path,
            hyp_id: hyp,
            weighted_gain: gain,
            leaves_before: leaves.len() - 1,
            g_before: g_cur,
            g_after: g_new,
            err_before: err_cur,
            err_after: err_new,
        });
        g_cur = g_new;
        err_cur = err_new;
    }

    for l in &leaves {
        let w = l.neg + l.pos;
        tree.set_label(l.node, Label(w > 0.0 && l.mu() > 0.5))?;
    }
    Ok((tree, trace))
}

/// `Pr[T(x) != y]`.
pub fn evaluate_error(
    tree: &DecisionTree,
    class: &HypothesisClass,
    dist: &LabeledDistribution,
) -> Result<f64> {
    check_dim(class.dim(), dist.dim())?;
    tree.check_class(class)?;
    let mut err = 0.0;
    for i in 0..dist.cell_count() {
        let (a, b) = dist.masses(i);
        let label = tree.label_of(tree.leaf_for(class, dist.point(i)));
        err += if label.0 { a } else { b };
    }
    Ok(err / dist.total())
}

/// `error_eval(T_s)` for every size `s = 1..=final` of a trained trace,
/// leaves labeled by majority under `train`.
pub fn error_curve(
    trace: &TrainTrace,
    class: &HypothesisClass,
    train: &LabeledDistribution,
    eval: &LabeledDistribution,
) -> Result<Vec<f64>> {
    check_dim(class.dim(), train.dim())?;
    check_dim(class.dim(), eval.dim())?;
    let total = eval.total();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    let nodes = 1 + 2 * trace.steps.len();
    let mut cells: [Vec<Vec<u32>>; 2] = [vec![Vec::new(); nodes], vec![Vec::new(); nodes]];
    let mut acc: [Vec<(f64, f64)>; 2] = [vec![(0.0, 0.0); nodes], vec![(0.0, 0.0); nodes]];
    for (k, dist) in [train, eval].into_iter().enumerate() {
        cells[k][0] = (0..dist.cell_count() as u32).collect();
        for i in 0..dist.cell_count() {
            let (a, b) = dist.masses(i);
            acc[k][0].0 += a;
            acc[k][0].1 += b;
        }
    }
    let contrib = |acc: &[Vec<(f64, f64)>; 2], id: usize| {
        let (neg, pos) = acc[0][id];
        let label = neg + pos > 0.0 && pos / (neg + pos) > 0.5;
        if label {
            acc[1][id].0
        } else {
            acc[1][id].1
        }
    };
    let mut live = vec![0usize];
    let mut out = vec![contrib(&acc, 0) / total];
    for (s, step) in trace.steps.iter().enumerate() {
        let (z, o) = (2 * s + 1, 2 * s + 2);
        for (k, dist) in [train, eval].into_iter().enumerate() {
            for c in std::mem::take(&mut cells[k][step.leaf_id]) {
                let (a, b) = dist.masses(c as usize);
                let child = if class.eval(step.hyp_id, dist.point(c as usize)) {
                    o
                } else {
                    z
                };
                acc[k][child].0 += a;
                acc[k][child].1 += b;
                cells[k][child].push(c);
            }
        }
        let pos = live
            .iter()
            .position(|&l| l == step.leaf_id)
            .ok_or_else(|| Error::OutOfRange(format!("node {} is not a leaf", step.leaf_id)))?;
        live.remove(pos);
        live.push(z);
        live.push(o);
        out.push(live.iter().map(|&l| contrib(&acc, l)).sum::<f64>() / total);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditOptions {
    /// Free slack `e`; `None` uses the largest admissible `e` at each step.
    pub e: Option<f64>,
    /// Constant `c` in the condition `error >= c eta / gamma + e`.
    pub c: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { e: None, c: 12.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditRecord {
    pub iter: usize,
    pub leaves: usize,
    pub error: f64,
    pub e: f64,
    /// `4 gamma^2 e^2 / s`.
    pub bound: f64,
    pub gain: f64,
    pub checked: bool,
    pub pass: bool,
}

impl AuditRecord {
    pub fn margin(&self) -> f64 {
        self.gain - self.bound
    }
}

/// Trains on `dist` and checks the per-split drop bound at every step
/// whose error clears the noise threshold.
pub fn progress_audit(
    dist: &LabeledDistribution,
    cfg: &TrainConfig,
    gamma: f64,
    eta: f64,
    opts: AuditOptions,
) -> Result<Vec<AuditRecord>> {
    if !dist.is_explicit() {
        return Err(Error::NotExplicit);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::OutOfRange(format!("gamma {gamma} not in (0,1]")));
    }
    let (_, trace) = train(dist, cfg)?;
    let threshold = opts.c * eta / gamma;
    let record = |iter: usize, leaves: usize, error: f64, gain: f64| {
        let e = opts.e.unwrap_or(error - threshold);
        let checked = e > 0.0 && error >= threshold + e - 1e-15;
        let bound = if checked {
            4.0 * gamma * gamma * e * e / leaves as f64
        } else {
            0.0
        };
        AuditRecord {
            iter,
            leaves,
            error,
            e,
            bound,
            gain,
            checked,
            pass: !checked || gain >= bound - DROP_TOL,
        }
    };
    let mut out: Vec<AuditRecord> = trace
        .steps
        .iter()
        .map(|s| record(s.iter, s.leaves_before, s.err_before, s.weighted_gain))
        .collect();
    // Stopping with leaves left to grow means the best available gain was 0.
    let last = trace.final_size();
    if last < cfg.size_bound {
        out.push(record(trace.steps.len() + 1, last, trace.err_at(last), 0.0));
    }
    Ok(out)
}

/// Constant in front of the sample-size formula.
pub const SAMPLE_SIZE_C: f64 = 8.0;

/// Unrounded `c t^2 |H| ln(t |H| / (1 - confidence)) / tau^2`.
pub fn sample_size_raw(tau: f64, t: usize, class_size: usize, confidence: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(Error::OutOfRange(format!("tau {tau} not in (0, 1/2]")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence {confidence} not in (0,1)"
        )));
    }
    if t == 0 || class_size == 0 {
        return Err(Error::OutOfRange("t and |H| must be positive".into()));
    }
    let (t, h) = (t as f64, class_size as f64);
    let log = (t * h / (1.0 - confidence)).ln().max(0.0);
    Ok(SAMPLE_SIZE_C * t * t * h * log / (tau * tau))
}

/// Samples sufficient for every empirical gain to be within `tau` of the truth.
pub fn sample_size_for(tau: f64, t: usize, class_size: usize, confidence: f64) -> Result<u64> {
    let raw = sample_size_raw(tau, t, class_size, confidence)?;
    if raw >= u64::MAX as f64 {
        return Err(Error::OutOfRange("sample size overflows u64".into()));
    }
    Ok((raw.ceil() as u64).max(1))
}
