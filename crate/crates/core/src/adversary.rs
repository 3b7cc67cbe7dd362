//! Sample-level corruption, distribution shift, and the lower-bound instance.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

use crate::cube::{BitPoint, Label, TruthTable, MAX_EXPLICIT_DIM};
use crate::dist::{make_explicit, stable_sum, EmpiricalDist, ExplicitDist};
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::targets::{embed, tribes, tribes_params_for};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    NastySample,
    AgnosticLabels,
    ShiftMixture,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::NastySample => "nasty",
            NoiseModel::AgnosticLabels => "agnostic",
            NoiseModel::ShiftMixture => "shift",
        })
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nasty" => Ok(NoiseModel::NastySample),
            "agnostic" => Ok(NoiseModel::AgnosticLabels),
            "shift" => Ok(NoiseModel::ShiftMixture),
            _ => Err(Error::OutOfRange(format!("noise model {s:?}"))),
        }
    }
}

/// How a sample adversary chooses its edits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Uniformly random records become uniformly random records
    /// (agnostic: uniformly random records get their label flipped).
    RandomReplace,
    /// Flip labels on records where the most correlated coordinate agrees with the label.
    FlipAgreeingLabels,
    /// Replace records by draws that push every correlated coordinate against the label.
    CorrelationCancel,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::RandomReplace => "random-replace",
            Strategy::FlipAgreeingLabels => "flip-agreeing-labels",
            Strategy::CorrelationCancel => "correlation-cancel",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-replace" => Ok(Strategy::RandomReplace),
            "flip-agreeing-labels" => Ok(Strategy::FlipAgreeingLabels),
            "correlation-cancel" => Ok(Strategy::CorrelationCancel),
            _ => Err(Error::InvalidStrategy(s.to_string())),
        }
    }
}

/// `count` consecutive records starting at `index` (canonical order of the
/// input sample), all equal to `before`, each replaced by `after`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edit {
    pub index: u64,
    pub count: u64,
    pub before: (BitPoint, Label),
    pub after: (BitPoint, Label),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionPlan {
    pub model: NoiseModel,
    pub eta: f64,
    pub seed: u64,
    pub strategy: Option<Strategy>,
    /// Size of the clean sample; 0 for mixtures.
    pub n: u64,
    pub edits: Vec<Edit>,
    /// Mixture component for [`NoiseModel::ShiftMixture`].
    pub component: Option<ExplicitDist>,
}

impl CorruptionPlan {
    pub const CSV_HEADER: &'static str = "index,before_point,before_label,after_point,after_label";

    fn sample(model: NoiseModel, eta: f64, seed: u64, strategy: Strategy, n: u64) -> Self {
        Self {
            model,
            eta,
            seed,
            strategy: Some(strategy),
            n,
            edits: Vec::new(),
            component: None,
        }
    }

    pub fn shift(eta: f64, component: ExplicitDist) -> Self {
        Self {
            model: NoiseModel::ShiftMixture,
            eta,
            seed: 0,
            strategy: None,
            n: 0,
            edits: Vec::new(),
            component: Some(component),
        }
    }

    /// Number of records changed.
    pub fn edit_count(&self) -> u64 {
        self.edits.iter().map(|e| e.count).sum()
    }

    /// `floor(eta * n)`, exact.
    pub fn budget(&self) -> u64 {
        edit_budget(self.eta, self.n).unwrap_or(0)
    }

    pub fn labels_only(&self) -> bool {
        self.edits.iter().all(|e| e.before.0 == e.after.0)
    }

    /// One CSV line per changed record.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for e in &self.edits {
            for j in 0..e.count {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    e.index + j,
                    e.before.0,
                    e.before.1.value(),
                    e.after.0,
                    e.after.1.value()
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }
}

/// `floor(eta * n)` computed in exact arithmetic.
pub fn edit_budget(eta: f64, n: u64) -> Result<u64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta {eta} not in [0,1)")));
    }
    let e = BigRational::from_float(eta).expect("finite");
    let m = (e * BigRational::from_integer(BigInt::from(n))).floor();
    Ok(m.to_integer().to_u64().expect("at most n"))
}

/// Signed `Cov[x_i, y]` over the sample, per coordinate.
pub fn sample_covariances(sample: &EmpiricalDist) -> Vec<f64> {
    let d = sample.dim();
    let n = sample.len() as f64;
    let mut ex = vec![0.0; d];
    let mut exy = vec![0.0; d];
    let mut ey = 0.0;
    for c in sample.cells() {
        let (neg, pos) = (c.neg as f64, c.pos as f64);
        ey += pos - neg;
        for i in 0..d {
            let s = c.point.sign(i) as f64;
            ex[i] += s * (neg + pos);
            exy[i] += s * (pos - neg);
        }
    }
    (0..d)
        .map(|i| exy[i] / n - (ex[i] / n) * (ey / n))
        .collect()
}

/// Run of identical records in canonical order.
struct Group {
    start: u64,
    size: u64,
    record: (BitPoint, Label),
}

fn groups(sample: &EmpiricalDist) -> Vec<Group> {
    let mut out = Vec::with_capacity(2 * sample.cells().len());
    let mut start = 0;
    for c in sample.cells() {
        for (size, y) in [(c.neg, Label::ZERO), (c.pos, Label::ONE)] {
            if size > 0 {
                out.push(Group {
                    start,
                    size,
                    record: (c.point, y),
                });
                start += size;
            }
        }
    }
    out
}

/// Successes among `draws` taken without replacement from `total` items of
/// which `good` succeed. Small-mode cases use inverse transform from
/// `Pr[X = 0]`, whose cost grows with `min(good, draws)` only.
fn hypergeometric(total: u64, good: u64, draws: u64, rng: &mut impl Rng) -> u64 {
    let n = total;
    let (n1, flip_good) = if good > n - good {
        (n - good, true)
    } else {
        (good, false)
    };
    let (k, flip_draws) = if draws > n / 2 {
        (n - draws, true)
    } else {
        (draws, false)
    };
    let mode = ((k + 1) as f64 * (n1 + 1) as f64 / (n + 2) as f64).floor();
    let x = if mode >= 10.0 {
        Hypergeometric::new(n, n1, k)
            .expect("n1, k <= n")
            .sample(rng)
    } else {
        let (a, b) = (n1.min(k), n1.max(k));
        let ln_p0: f64 = (0..a).map(|j| (-(b as f64) / (n - j) as f64).ln_1p()).sum();
        let mut p = ln_p0.exp();
        let mut u: f64 = rng.random();
        let mut x = 0;
        while u > p && x < a {
            u -= p;
            p *=
                ((n1 - x) as f64 * (k - x) as f64) / ((x + 1) as f64 * (n - n1 - k + x + 1) as f64);
            x += 1;
        }
        x
    };
    // Undo the swaps: drawing the complement, then counting failures.
    let x = if flip_draws { n1 - x } else { x };
    if flip_good {
        draws - x
    } else {
        x
    }
}

/// Uniform `m`-subset of the eligible groups' records. Within a group the
/// records are identical, so the first `k` indices stand for any `k` of them.
fn select(
    groups: &[Group],
    eligible: impl Fn(&Group) -> bool,
    m: u64,
    rng: &mut impl Rng,
) -> Vec<(usize, u64)> {
    let idx: Vec<usize> = (0..groups.len())
        .filter(|&i| eligible(&groups[i]))
        .collect();
    let mut total: u64 = idx.iter().map(|&i| groups[i].size).sum();
    let mut left = m.min(total);
    let mut out = Vec::new();
    for i in idx {
        if left == 0 {
            break;
        }
        let size = groups[i].size;
        let k = if left >= total {
            size
        } else {
            hypergeometric(total, size, left, rng)
        };
        if k > 0 {
            out.push((i, k));
        }
        total -= size;
        left -= k;
    }
    out
}

/// Law of replacement records: label uniform, coordinates in `fixed` set to
/// `sign * (-y)`, all other coordinates uniform.
struct ReplacementLaw {
    d: usize,
    fixed: Vec<(usize, i8)>,
}

impl ReplacementLaw {
    fn point(&self, y: Label, free_bits: u64, free: &[usize]) -> BitPoint {
        let mut bits = 0u64;
        for (j, &i) in free.iter().enumerate() {
            bits |= ((free_bits >> j) & 1) << i;
        }
        for &(i, s) in &self.fixed {
            if s * -y.signed() > 0 {
                bits |= 1 << i;
            }
        }
        BitPoint::new(bits, self.d).expect("bits in range")
    }

    /// Counts of `m` draws keyed by `(point bits, label)` in canonical order.
    fn draw(&self, m: u64, rng: &mut impl Rng) -> Vec<((BitPoint, Label), u64)> {
        let fixed: Vec<usize> = self.fixed.iter().map(|p| p.0).collect();
        let free: Vec<usize> = (0..self.d).filter(|i| !fixed.contains(i)).collect();
        let f = free.len();
        let mut out: BTreeMap<(u64, bool), u64> = BTreeMap::new();
        let pos = Binomial::new(m, 0.5).expect("valid").sample(rng);
        for (y, c) in [(Label::ZERO, m - pos), (Label::ONE, pos)] {
            if f <= MAX_EXPLICIT_DIM && c >= 1u64 << f {
                let cells = 1u64 << f;
                let mut rest = c;
                for j in 0..cells {
                    let k = if j + 1 == cells {
                        rest
                    } else {
                        Binomial::new(rest, 1.0 / (cells - j) as f64)
                            .expect("valid")
                            .sample(rng)
                    };
                    rest -= k;
                    if k > 0 {
                        *out.entry((self.point(y, j, &free).bits(), y.0))
                            .or_default() += k;
                    }
                }
            } else {
                let mask = if f == 64 { u64::MAX } else { (1u64 << f) - 1 };
                for _ in 0..c {
                    let x = self.point(y, rng.random::<u64>() & mask, &free);
                    *out.entry((x.bits(), y.0)).or_default() += 1;
                }
            }
        }
        out.into_iter()
            .map(|((b, y), k)| ((BitPoint::new(b, self.d).expect("bits"), Label(y)), k))
            .collect()
    }
}

fn strongest_coordinate(cov: &[f64]) -> Option<(usize, i8)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in cov.iter().enumerate() {
        if c.abs() > best.map_or(0.0, |b| b.1.abs()) {
            best = Some((i, c));
        }
    }
    best.map(|(i, c)| (i, if c > 0.0 { 1 } else { -1 }))
}

fn apply(sample: &EmpiricalDist, edits: &[Edit]) -> Result<EmpiricalDist> {
    let mut map = sample.count_map();
    for e in edits {
        let slot = map
            .get_mut(&e.before.0.bits())
            .expect("edited record exists");
        if e.before.1 .0 {
            slot.1 -= e.count;
        } else {
            slot.0 -= e.count;
        }
        let slot = map.entry(e.after.0.bits()).or_default();
        if e.after.1 .0 {
            slot.1 += e.count;
        } else {
            slot.0 += e.count;
        }
    }
    EmpiricalDist::from_count_map(sample.dim(), map)
}

/// Pairs selected runs with replacement counts, splitting runs as needed.
fn pair_edits(
    groups: &[Group],
    chosen: &[(usize, u64)],
    afters: &[((BitPoint, Label), u64)],
) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut a = afters.iter().copied();
    let mut cur = a.next();
    for &(gi, k) in chosen {
        let g = &groups[gi];
        let mut offset = 0;
        while offset < k {
            let (rec, avail) = cur.expect("as many replacements as selections");
            let take = avail.min(k - offset);
            if rec != g.record {
                edits.push(Edit {
                    index: g.start + offset,
                    count: take,
                    before: g.record,
                    after: rec,
                });
            }
            offset += take;
            cur = if take == avail {
                a.next()
            } else {
                Some((rec, avail - take))
            };
        }
    }
    edits
}

fn flip_edits(groups: &[Group], chosen: &[(usize, u64)]) -> Vec<Edit> {
    chosen
        .iter()
        .map(|&(gi, k)| {
            let g = &groups[gi];
            Edit {
                index: g.start,
                count: k,
                before: g.record,
                after: (g.record.0, g.record.1.flipped()),
            }
        })
        .collect()
}

fn agreeing(cov: &[f64]) -> impl Fn(&Group) -> bool {
    let best = strongest_coordinate(cov);
    move |g: &Group| match best {
        Some((i, s)) => s * g.record.0.sign(i) * g.record.1.signed() > 0,
        None => false,
    }
}

/// Nasty noise: replaces at most `floor(eta n)` records of `sample`.
pub fn corrupt_sample_nasty(
    sample: &EmpiricalDist,
    eta: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<(EmpiricalDist, CorruptionPlan)> {
    let n = sample.len();
    let m = edit_budget(eta, n)?;
    let mut plan = CorruptionPlan::sample(NoiseModel::NastySample, eta, seed, strategy, n);
    if m == 0 {
        return Ok((sample.clone(), plan));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = sample.dim();
    let gs = groups(sample);
    plan.edits = match strategy {
        Strategy::RandomReplace => {
            let chosen = select(&gs, |_| true, m, &mut rng);
            let law = ReplacementLaw {
                d,
                fixed: Vec::new(),
            };
            pair_edits(&gs, &chosen, &law.draw(m, &mut rng))
        }
        Strategy::FlipAgreeingLabels => {
            let cov = sample_covariances(sample);
            let chosen = select(&gs, agreeing(&cov), m, &mut rng);
            flip_edits(&gs, &chosen)
        }
        Strategy::CorrelationCancel => {
            let cov = sample_covariances(sample);
            let fixed = cov
                .iter()
                .enumerate()
                .filter(|(_, c)| c.abs() > 1e-12)
                .map(|(i, &c)| (i, if c > 0.0 { 1 } else { -1 }))
                .collect();
            let chosen = select(&gs, |_| true, m, &mut rng);
            let law = ReplacementLaw { d, fixed };
            pair_edits(&gs, &chosen, &law.draw(m, &mut rng))
        }
    };
    Ok((apply(sample, &plan.edits)?, plan))
}

/// Agnostic noise: flips at most `floor(eta n)` labels, points unchanged.
pub fn corrupt_labels_agnostic(
    sample: &EmpiricalDist,
    eta: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<(EmpiricalDist, CorruptionPlan)> {
    if strategy == Strategy::CorrelationCancel {
        return Err(Error::InvalidStrategy(format!("{strategy} moves points")));
    }
    let n = sample.len();
    let m = edit_budget(eta, n)?;
    let mut plan = CorruptionPlan::sample(NoiseModel::AgnosticLabels, eta, seed, strategy, n);
    if m == 0 {
        return Ok((sample.clone(), plan));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gs = groups(sample);
    let chosen = match strategy {
        Strategy::FlipAgreeingLabels => {
            let cov = sample_covariances(sample);
            select(&gs, agreeing(&cov), m, &mut rng)
        }
        _ => select(&gs, |_| true, m, &mut rng),
    };
    plan.edits = flip_edits(&gs, &chosen);
    Ok((apply(sample, &plan.edits)?, plan))
}

/// `(1 - eta) D + eta E`, pointwise on the union of supports.
pub fn shift_mixture(d: &ExplicitDist, e: &ExplicitDist, eta: f64) -> Result<ExplicitDist> {
    check_dim(d.dim(), e.dim())?;
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta {eta} not in [0,1)")));
    }
    let mut acc: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (dist, w) in [(d, 1.0 - eta), (e, eta)] {
        for r in dist.rows() {
            let slot = acc.entry(r.point.bits()).or_default();
            slot.0 += w * r.mass;
            slot.1 += w * r.mass * r.rate;
        }
    }
    let dim = d.dim();
    make_explicit(
        acc.into_iter()
            .map(|(b, (m, p))| {
                let rate = if m > 0.0 {
                    (p / m).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (BitPoint::new(b, dim).expect("bits in range"), m, rate)
            })
            .collect(),
    )
}

/// Mixture instance on which every projection has zero covariance with the label.
#[derive(Clone, Debug)]
pub struct LowerBoundInstance {
    pub d: usize,
    pub k: usize,
    pub w: usize,
    pub s: usize,
    /// Cap on the junta width, `ceil(c log2(1/gamma) / gamma)`.
    pub ell: usize,
    pub eps: f64,
    pub gamma: f64,
    /// Common signed correlation `E[x_i g]` for `i < k`.
    pub v: f64,
    pub eta: f64,
    /// `g = Tribes_{w,s}` on the first `k` coordinates.
    pub junta: TruthTable,
    /// `f(x) = g(x_0..x_k)` on all `d` coordinates.
    pub target: TruthTable,
    pub clean: ExplicitDist,
    pub component: ExplicitDist,
    pub mixed: ExplicitDist,
    pub class: HypothesisClass,
}

impl LowerBoundInstance {
    /// `(1 - eta) v - eta`.
    pub fn residual(&self) -> f64 {
        (1.0 - self.eta) * self.v - self.eta
    }

    pub fn plan(&self) -> CorruptionPlan {
        CorruptionPlan::shift(self.eta, self.component.clone())
    }
}

/// Width cap `ceil(c log2(1/gamma) / gamma)`.
pub fn junta_width(gamma: f64, c: f64) -> usize {
    (c * (1.0 / gamma).log2() / gamma).ceil().max(1.0) as usize
}

pub fn build_lowerbound_instance(d: usize, eps: f64, gamma: f64) -> Result<LowerBoundInstance> {
    build_lowerbound_instance_with(d, eps, gamma, 1.0)
}

/// Lower-bound instance with junta width constant `c`.
pub fn build_lowerbound_instance_with(
    d: usize,
    eps: f64,
    gamma: f64,
    c: f64,
) -> Result<LowerBoundInstance> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InfeasibleParameters(format!(
            "gamma {gamma} not in (0,1)"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0 / 6.0) {
        return Err(Error::InfeasibleParameters(format!(
            "eps {eps} not in (0, 1/6]"
        )));
    }
    if gamma.powf(1.0 / gamma) > eps {
        return Err(Error::InfeasibleParameters(format!(
            "gamma^(1/gamma) = {} exceeds eps = {eps}",
            gamma.powf(1.0 / gamma)
        )));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InfeasibleParameters(format!("c = {c}")));
    }
    if d == 0 || d > MAX_EXPLICIT_DIM {
        return Err(Error::InfeasibleParameters(format!(
            "d = {d} outside explicit range"
        )));
    }
    let ell = junta_width(gamma, c);
    let p = tribes_params_for(2.0 * eps, ell.min(d))?;
    if p.k > d {
        return Err(Error::InfeasibleParameters(format!(
            "k = {} > d = {d}",
            p.k
        )));
    }
    let junta = tribes(p.w, p.s)?;
    let target = embed(&junta, d)?;

    // Exact signed correlation of a relevant coordinate with g.
    let kk = p.k as u32;
    let false_count = (0..1u64 << p.k).filter(|&b| !junta.get(b)).count() as f64;
    let pr_false = false_count / f64::from(2u32).powi(kk as i32);
    let v = 2.0 * pr_false / ((p.w as f64).exp2() - 1.0);
    let eta = v / (1.0 + v);

    let n = 1usize << d;
    let clean = ExplicitDist::uniform_with(&target)?;
    let low = (1u64 << p.k) - 1;
    let half = 0.5 / (1u64 << (d - p.k)) as f64;
    let component = make_explicit(
        (0..n as u64)
            .map(|b| {
                let x = BitPoint::new(b, d).expect("bits in range");
                match b & low {
                    0 => (x, half, 1.0),
                    j if j == low => (x, half, 0.0),
                    _ => (x, 0.0, 0.0),
                }
            })
            .collect(),
    )?;
    let mixed = shift_mixture(&clean, &component, eta)?;
    Ok(LowerBoundInstance {
        d,
        k: p.k,
        w: p.w,
        s: p.s,
        ell,
        eps,
        gamma,
        v,
        eta,
        junta,
        target,
        clean,
        component,
        mixed,
        class: HypothesisClass::projections(d),
    })
}

/// Signed `Cov[x_i, y]` under an explicit distribution.
pub fn explicit_covariances(dist: &ExplicitDist) -> Vec<f64> {
    let d = dist.dim();
    let ey = stable_sum(dist.rows().iter().map(|r| r.mass * (2.0 * r.rate - 1.0)));
    (0..d)
        .map(|i| {
            let ex = stable_sum(dist.rows().iter().map(|r| r.mass * r.point.sign(i) as f64));
            let exy = stable_sum(
                dist.rows()
                    .iter()
                    .map(|r| r.mass * r.point.sign(i) as f64 * (2.0 * r.rate - 1.0)),
            );
            exy - ex * ey
        })
        .collect()
}
