//! Labeled distributions over `{-1,+1}^d x {0,1}` and their conditioned views.
//!
//! Two storage modes share one cell interface: an explicit table of
//! `(point, mass, positive_rate)` rows, and an empirical multiset kept as
//! per-point label counts. Every learner and oracle reads cells as a pair of
//! unnormalized masses `(negative, positive)` plus a normalizing total.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cube::{BitPoint, BoolFn, Label, MAX_EXPLICIT_DIM};
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::Hypothesis;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Compensated (Neumaier) sum.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplicitRow {
    pub point: BitPoint,
    pub mass: f64,
    /// Conditional probability of label 1 at this point.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitDist {
    dim: usize,
    rows: Vec<ExplicitRow>,
}

impl ExplicitDist {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[ExplicitRow] {
        &self.rows
    }

    /// Row for `x`, if it is in the table.
    pub fn row(&self, x: BitPoint) -> Option<&ExplicitRow> {
        self.rows
            .binary_search_by_key(&x.bits(), |r| r.point.bits())
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Deterministic labels `y = f(x)` under the dense marginal `masses`.
    pub fn from_marginal<F: BoolFn + ?Sized>(masses: &[f64], f: &F) -> Result<Self> {
        let dim = f.dim();
        if masses.len() != 1 << dim {
            return Err(Error::DimMismatch {
                expected: 1 << dim,
                found: masses.len(),
            });
        }
        let table = masses
            .iter()
            .enumerate()
            .map(|(b, &m)| {
                let x = BitPoint::from_raw(b as u64, dim);
                (x, m, if f.eval(x) { 1.0 } else { 0.0 })
            })
            .collect();
        make_explicit(table)
    }

    /// Uniform marginal with deterministic labels `y = f(x)`.
    pub fn uniform_with<F: BoolFn + ?Sized>(f: &F) -> Result<Self> {
        let n = 1usize << f.dim();
        Self::from_marginal(&vec![1.0 / n as f64; n], f)
    }

    /// Line-oriented text form: `dim=<d>` then `bitstring mass rate` per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("dim={}\n", self.dim);
        for r in &self.rows {
            let _ = writeln!(s, "{} {:.16e} {:.16e}", r.point, r.mass, r.rate);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut table = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if dim.is_none() {
                let d = line
                    .strip_prefix("dim=")
                    .ok_or_else(|| perr("expected dim=<d> header".into()))?
                    .parse::<usize>()
                    .map_err(|e| perr(e.to_string()))?;
                dim = Some(d);
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(p), Some(m), Some(q), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(perr(format!("expected 3 fields in {line:?}")));
            };
            let point = BitPoint::from_bitstring(p).map_err(|e| perr(e.to_string()))?;
            let mass = m.parse::<f64>().map_err(|e| perr(e.to_string()))?;
            let rate = q.parse::<f64>().map_err(|e| perr(e.to_string()))?;
            table.push((point, mass, rate));
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            msg: "missing dim header".into(),
        })?;
        if let Some((p, _, _)) = table.iter().find(|(p, _, _)| p.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        make_explicit(table)
    }
}

/// Builds an explicit distribution from `(point, mass, positive_rate)` rows.
pub fn make_explicit(table: Vec<(BitPoint, f64, f64)>) -> Result<ExplicitDist> {
    let Some(first) = table.first() else {
        return Err(Error::EmptyDistribution);
    };
    let dim = first.0.dim();
    if dim > MAX_EXPLICIT_DIM {
        return Err(Error::OutOfRange(format!(
            "explicit mode supports d <= {MAX_EXPLICIT_DIM}, got {dim}"
        )));
    }
    let mut rows = Vec::with_capacity(table.len());
    for (point, mass, rate) in table {
        check_dim(dim, point.dim())?;
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::OutOfRange(format!("mass {mass} at {point}")));
        }
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::OutOfRange(format!("rate {rate} at {point}")));
        }
        rows.push(ExplicitRow { point, mass, rate });
    }
    rows.sort_by_key(|r| r.point.bits());
    if let Some(w) = rows.windows(2).find(|w| w[0].point == w[1].point) {
        return Err(Error::DuplicatePoint(w[0].point.to_string()));
    }
    let sum = stable_sum(rows.iter().map(|r| r.mass));
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NonNormalized { sum });
    }
    Ok(ExplicitDist { dim, rows })
}

/// Per-point label counts of an empirical multiset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountCell {
    pub point: BitPoint,
    pub neg: u64,
    pub pos: u64,
}

/// A nonempty multiset of labeled records with uniform mass per record.
///
/// Records have a canonical order: by point word, then label 0 before label 1.
/// Record indices used in corruption audits refer to that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDist {
    dim: usize,
    cells: Vec<CountCell>,
    n: u64,
}

impl EmpiricalDist {
    pub fn from_records(
        dim: usize,
        records: impl IntoIterator<Item = (BitPoint, Label)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for (x, y) in records {
            check_dim(dim, x.dim())?;
            let e = map.entry(x.bits()).or_default();
            if y.0 {
                e.1 += 1;
            } else {
                e.0 += 1;
            }
        }
        Self::from_count_map(dim, map)
    }

    pub(crate) fn from_count_map(dim: usize, map: BTreeMap<u64, (u64, u64)>) -> Result<Self> {
        let cells: Vec<CountCell> = map
            .into_iter()
            .filter(|(_, (a, b))| a + b > 0)
            .map(|(bits, (neg, pos))| CountCell {
                point: BitPoint::from_raw(bits, dim),
                neg,
                pos,
            })
            .collect();
        let n = cells.iter().map(|c| c.neg + c.pos).sum();
        if n == 0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self { dim, cells, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[CountCell] {
        &self.cells
    }

    /// Number of records.
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, x: BitPoint, y: Label) -> u64 {
        self.cells
            .binary_search_by_key(&x.bits(), |c| c.point.bits())
            .map(|i| {
                if y.0 {
                    self.cells[i].pos
                } else {
                    self.cells[i].neg
                }
            })
            .unwrap_or(0)
    }

    /// Expands the multiset into records in canonical order.
    pub fn records(&self) -> impl Iterator<Item = (BitPoint, Label)> + '_ {
        self.cells.iter().flat_map(|c| {
            std::iter::repeat_n((c.point, Label::ZERO), c.neg as usize)
                .chain(std::iter::repeat_n((c.point, Label::ONE), c.pos as usize))
        })
    }

    /// `n` i.i.d. records from `dist`, drawn as one multinomial over
    /// `(point, label)` cells by sequential binomials.
    pub fn draw(dist: &ExplicitDist, n: u64, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDistribution);
        }
        let cells: Vec<f64> = dist
            .rows
            .iter()
            .flat_map(|r| [r.mass * (1.0 - r.rate), r.mass * r.rate])
            .collect();
        let mut rest_mass = stable_sum(cells.iter().copied());
        let mut rest = n;
        let mut map = BTreeMap::new();
        for (i, &p) in cells.iter().enumerate() {
            if rest == 0 {
                break;
            }
            let q = if rest_mass > 0.0 {
                (p / rest_mass).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let k = if q >= 1.0 {
                rest
            } else {
                Binomial::new(rest, q)
                    .map_err(|e| Error::OutOfRange(e.to_string()))?
                    .sample(rng)
            };
            rest -= k;
            rest_mass -= p;
            if k > 0 {
                let e: &mut (u64, u64) = map.entry(dist.rows[i / 2].point.bits()).or_default();
                if i % 2 == 1 {
                    e.1 += k;
                } else {
                    e.0 += k;
                }
            }
        }
        if rest > 0 {
            // Rounding left mass unassigned; give it to the last positive cell.
            if let Some(i) = cells.iter().rposition(|&p| p > 0.0) {
                let e = map.entry(dist.rows[i / 2].point.bits()).or_default();
                if i % 2 == 1 {
                    e.1 += rest;
                } else {
                    e.0 += rest;
                }
            }
        }
        Self::from_count_map(dist.dim, map)
    }

    pub(crate) fn count_map(&self) -> BTreeMap<u64, (u64, u64)> {
        self.cells
            .iter()
            .map(|c| (c.point.bits(), (c.neg, c.pos)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LabeledDistribution {
    Explicit(ExplicitDist),
    Empirical(EmpiricalDist),
}

impl From<ExplicitDist> for LabeledDistribution {
    fn from(d: ExplicitDist) -> Self {
        LabeledDistribution::Explicit(d)
    }
}

impl From<EmpiricalDist> for LabeledDistribution {
    fn from(d: EmpiricalDist) -> Self {
        LabeledDistribution::Empirical(d)
    }
}

impl LabeledDistribution {
    pub fn dim(&self) -> usize {
        match self {
            LabeledDistribution::Explicit(d) => d.dim,
            LabeledDistribution::Empirical(d) => d.dim,
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, LabeledDistribution::Explicit(_))
    }

    pub fn as_explicit(&self) -> Result<&ExplicitDist> {
        match self {
            LabeledDistribution::Explicit(d) => Ok(d),
            LabeledDistribution::Empirical(_) => Err(Error::NotExplicit),
        }
    }

    /// Number of stored cells (distinct points).
    pub fn cell_count(&self) -> usize {
        match self {
            LabeledDistribution::Explicit(d) => d.rows.len(),
            LabeledDistribution::Empirical(d) => d.cells.len(),
        }
    }

    #[inline]
    pub fn point(&self, i: usize) -> BitPoint {
        match self {
            LabeledDistribution::Explicit(d) => d.rows[i].point,
            LabeledDistribution::Empirical(d) => d.cells[i].point,
        }
    }

    /// Unnormalized `(negative, positive)` mass of cell `i`.
    #[inline]
    pub fn masses(&self, i: usize) -> (f64, f64) {
        match self {
            LabeledDistribution::Explicit(d) => {
                let r = &d.rows[i];
                (r.mass * (1.0 - r.rate), r.mass * r.rate)
            }
            LabeledDistribution::Empirical(d) => {
                let c = &d.cells[i];
                (c.neg as f64, c.pos as f64)
            }
        }
    }

    /// Normalizing constant: the summed mass, or the record count.
    pub fn total(&self) -> f64 {
        match self {
            LabeledDistribution::Explicit(d) => stable_sum(d.rows.iter().map(|r| r.mass)),
            LabeledDistribution::Empirical(d) => d.n as f64,
        }
    }

    /// Dense point marginal (explicit dimensions only).
    pub fn marginal(&self) -> Result<Vec<f64>> {
        let dim = self.dim();
        if dim > MAX_EXPLICIT_DIM {
            return Err(Error::OutOfRange(format!("dense marginal for d = {dim}")));
        }
        let total = self.total();
        let mut m = vec![0.0; 1 << dim];
        for i in 0..self.cell_count() {
            let (a, b) = self.masses(i);
            m[self.point(i).bits() as usize] = (a + b) / total;
        }
        Ok(m)
    }

    /// Dense normalized joint masses indexed by `2 * point + label`.
    pub fn joint(&self) -> Result<Vec<f64>> {
        let dim = self.dim();
        if dim > MAX_EXPLICIT_DIM {
            return Err(Error::OutOfRange(format!("dense joint for d = {dim}")));
        }
        let total = self.total();
        let mut m = vec![0.0; 2 << dim];
        for i in 0..self.cell_count() {
            let (a, b) = self.masses(i);
            let x = self.point(i).bits() as usize;
            m[2 * x] = a / total;
            m[2 * x + 1] = b / total;
        }
        Ok(m)
    }

    /// Unconditioned view.
    pub fn view(&self) -> ConditionedView<'_> {
        ConditionedView::new(self, Vec::new(), (0..self.cell_count() as u32).collect())
    }
}

/// One path constraint: `hyp(x) == branch`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub hyp: Hypothesis,
    pub branch: bool,
}

impl Constraint {
    pub fn new(hyp: Hypothesis, branch: bool) -> Self {
        Self { hyp, branch }
    }

    /// `x_i = +1` (or `-1` when `positive` is false).
    pub fn coordinate(i: usize, positive: bool) -> Self {
        Self::new(Hypothesis::Projection(i), positive)
    }

    #[inline]
    pub fn holds(&self, x: BitPoint) -> bool {
        self.hyp.eval(x) == self.branch
    }
}

/// First two moments of a view: weight, bias `mu = Pr[y = 1]`, and `Var[y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub weight: f64,
    pub mu: f64,
    pub var: f64,
}

/// A distribution conditioned on a conjunction of path constraints.
#[derive(Clone, Debug)]
pub struct ConditionedView<'a> {
    base: &'a LabeledDistribution,
    path: Vec<Constraint>,
    cells: Vec<u32>,
    neg: f64,
    pos: f64,
}

impl<'a> ConditionedView<'a> {
    fn new(base: &'a LabeledDistribution, path: Vec<Constraint>, cells: Vec<u32>) -> Self {
        let (mut neg, mut pos) = (0.0, 0.0);
        for &i in &cells {
            let (a, b) = base.masses(i as usize);
            neg += a;
            pos += b;
        }
        Self {
            base,
            path,
            cells,
            neg,
            pos,
        }
    }

    pub fn base(&self) -> &'a LabeledDistribution {
        self.base
    }

    pub fn path(&self) -> &[Constraint] {
        &self.path
    }

    /// Indices of the base cells that satisfy the path.
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    /// Unnormalized `(negative, positive)` mass.
    pub fn raw_masses(&self) -> (f64, f64) {
        (self.neg, self.pos)
    }

    /// `w = Pr[path satisfied]`.
    pub fn weight(&self) -> f64 {
        (self.neg + self.pos) / self.base.total()
    }

    pub fn is_degenerate(&self) -> bool {
        self.neg + self.pos == 0.0
    }

    pub fn moments(&self) -> Result<Moments> {
        if self.is_degenerate() {
            return Err(Error::ZeroWeight);
        }
        let mu = self.pos / (self.neg + self.pos);
        Ok(Moments {
            weight: self.weight(),
            mu,
            var: mu * (1.0 - mu),
        })
    }

    /// Adds constraints to the path.
    pub fn refine(&self, extra: &[Constraint]) -> Result<ConditionedView<'a>> {
        let mut path = self.path.clone();
        path.extend_from_slice(extra);
        check_path(self.base.dim(), extra)?;
        let cells = self
            .cells
            .iter()
            .copied()
            .filter(|&i| {
                let x = self.base.point(i as usize);
                extra.iter().all(|c| c.holds(x))
            })
            .collect();
        Ok(ConditionedView::new(self.base, path, cells))
    }

    /// Children for `hyp = 0` and `hyp = 1`.
    pub fn split(&self, hyp: &Hypothesis) -> (ConditionedView<'a>, ConditionedView<'a>) {
        let (mut c0, mut c1) = (Vec::new(), Vec::new());
        for &i in &self.cells {
            if hyp.eval(self.base.point(i as usize)) {
                c1.push(i);
            } else {
                c0.push(i);
            }
        }
        let mut p0 = self.path.clone();
        p0.push(Constraint::new(hyp.clone(), false));
        let mut p1 = self.path.clone();
        p1.push(Constraint::new(hyp.clone(), true));
        (
            ConditionedView::new(self.base, p0, c0),
            ConditionedView::new(self.base, p1, c1),
        )
    }
}

fn check_path(dim: usize, path: &[Constraint]) -> Result<()> {
    for c in path {
        match &c.hyp {
            Hypothesis::Projection(i) if *i >= dim => {
                return Err(Error::OutOfRange(format!("coordinate {i} in dim {dim}")))
            }
            Hypothesis::Table(t) => check_dim(dim, t.dim())?,
            _ => {}
        }
    }
    Ok(())
}

/// `dist` conditioned on every constraint in `path` holding.
pub fn condition<'a>(
    dist: &'a LabeledDistribution,
    path: &[Constraint],
) -> Result<ConditionedView<'a>> {
    dist.view().refine(path)
}

/// Moments of a view; fails on zero-weight views.
pub fn moments(view: &ConditionedView<'_>) -> Result<Moments> {
    view.moments()
}
