//! Impurity functions and purity gain.

use std::fmt;
use std::str::FromStr;

use crate::dist::ConditionedView;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;

/// Slack allowed when comparing a computed drop against a lower bound.
pub const DROP_TOL: f64 = 1e-12;

const GRID_STEP: f64 = 1e-3;

/// A concave potential `G: [0,1] -> [0,1]` on leaf bias.
pub trait Impurity: Send + Sync {
    fn value(&self, p: f64) -> f64;
    /// Strong-concavity constant: `G'' <= -kappa` on `(0,1)`.
    fn kappa(&self) -> f64;
    fn id(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImpurityKind {
    Gini,
    BinaryEntropy,
    KmSqrt,
    /// `(k/8)·4p(1-p) + (1-k/8)·2min(p,1-p)` for `k` in `(0, 8]`.
    CustomConcave(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpurityFn {
    kind: ImpurityKind,
    kappa: f64,
}

impl ImpurityFn {
    pub fn gini() -> Self {
        Self {
            kind: ImpurityKind::Gini,
            kappa: 8.0,
        }
    }

    pub fn entropy() -> Self {
        Self {
            kind: ImpurityKind::BinaryEntropy,
            kappa: 4.0 / std::f64::consts::LN_2,
        }
    }

    pub fn kmsqrt() -> Self {
        Self {
            kind: ImpurityKind::KmSqrt,
            kappa: 4.0,
        }
    }

    pub fn concave(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 8.0) {
            return Err(Error::OutOfRange(format!(
                "concave kappa {kappa} not in (0, 8]"
            )));
        }
        let g = Self {
            kind: ImpurityKind::CustomConcave(kappa),
            kappa,
        };
        validate_on_grid(&g)?;
        Ok(g)
    }

    pub fn kind(&self) -> ImpurityKind {
        self.kind
    }

    /// All shipped kinds with their default parameters.
    pub fn standard() -> [ImpurityFn; 3] {
        [Self::gini(), Self::entropy(), Self::kmsqrt()]
    }
}

impl Impurity for ImpurityFn {
    #[inline]
    fn value(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self.kind {
            ImpurityKind::Gini => 4.0 * p * (1.0 - p),
            ImpurityKind::BinaryEntropy => {
                let h = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
                h(p) + h(1.0 - p)
            }
            ImpurityKind::KmSqrt => 2.0 * (p * (1.0 - p)).sqrt(),
            ImpurityKind::CustomConcave(k) => {
                let a = k / 8.0;
                a * 4.0 * p * (1.0 - p) + (1.0 - a) * 2.0 * p.min(1.0 - p)
            }
        }
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ImpurityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ImpurityKind::Gini => f.write_str("gini"),
            ImpurityKind::BinaryEntropy => f.write_str("entropy"),
            ImpurityKind::KmSqrt => f.write_str("kmsqrt"),
            ImpurityKind::CustomConcave(k) => write!(f, "concave:{k}"),
        }
    }
}

impl FromStr for ImpurityFn {
    type Err = Error;

    /// `gini | entropy | kmsqrt | concave:<kappa>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gini" => Ok(Self::gini()),
            "entropy" => Ok(Self::entropy()),
            "kmsqrt" => Ok(Self::kmsqrt()),
            other => {
                let k = other
                    .strip_prefix("concave:")
                    .ok_or_else(|| Error::OutOfRange(format!("unknown impurity `{other}`")))?;
                let k: f64 = k
                    .parse()
                    .map_err(|_| Error::OutOfRange(format!("bad kappa `{k}`")))?;
                Self::concave(k)
            }
        }
    }
}

/// Checks the impurity axioms and the stated `kappa` on a `1e-3` grid.
pub fn validate_on_grid(g: &dyn Impurity) -> Result<()> {
    let bad = |what: &str| Err(Error::OutOfRange(format!("{}: {what}", g.id())));
    if g.value(0.0) != 0.0 || g.value(1.0) != 0.0 {
        return bad("G(0) and G(1) must be 0");
    }
    if (g.value(0.5) - 1.0).abs() > 1e-12 {
        return bad("G(1/2) must be 1");
    }
    let n = (1.0 / GRID_STEP).round() as usize;
    let kappa = g.kappa();
    for j in 0..=n {
        let p = j as f64 * GRID_STEP;
        let v = g.value(p);
        if (v - g.value(1.0 - p)).abs() > 1e-12 {
            return bad("not symmetric");
        }
        if v < p.min(1.0 - p) - 1e-12 || v > 1.0 + 1e-12 {
            return bad("G(p) must lie in [min(p,1-p), 1]");
        }
        if j > 0 && j < n {
            let d2 = (g.value(p - GRID_STEP) - 2.0 * v + g.value(p + GRID_STEP))
                / (GRID_STEP * GRID_STEP);
            if d2 > -kappa * (1.0 - 1e-6) {
                return bad("second difference exceeds -kappa");
            }
        }
    }
    Ok(())
}

/// `G(p)` with range checking.
pub fn impurity_value(g: &dyn Impurity, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("bias {p} not in [0,1]")));
    }
    Ok(g.value(p))
}

/// Branch masses of a leaf split by one hypothesis, in base units.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SplitStats {
    pub neg0: f64,
    pub pos0: f64,
    pub neg1: f64,
    pub pos1: f64,
}

impl SplitStats {
    pub fn of(view: &ConditionedView<'_>, hyp: &Hypothesis) -> Self {
        let base = view.base();
        let mut s = SplitStats::default();
        for &i in view.cells() {
            let (a, b) = base.masses(i as usize);
            if hyp.eval(base.point(i as usize)) {
                s.neg1 += a;
                s.pos1 += b;
            } else {
                s.neg0 += a;
                s.pos0 += b;
            }
        }
        s
    }

    pub fn w0(&self) -> f64 {
        self.neg0 + self.pos0
    }

    pub fn w1(&self) -> f64 {
        self.neg1 + self.pos1
    }

    /// Both branches carry mass.
    pub fn admissible(&self) -> bool {
        self.w0() > 0.0 && self.w1() > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainReport {
    /// `Pr[h = 1]` at the leaf.
    pub tau: f64,
    pub mu: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub delta: f64,
    /// Leaf weight `w(l)`.
    pub weight: f64,
    pub weighted_delta: f64,
}

impl GainReport {
    pub fn bias_gap(&self) -> f64 {
        self.mu1 - self.mu0
    }
}

/// Gain of a split from its branch masses; `total` is the base mass.
/// An empty branch takes the leaf bias and the drop is 0.
#[inline]
pub fn gain_from_stats(s: &SplitStats, total: f64, g: &dyn Impurity) -> GainReport {
    let (w0, w1) = (s.w0(), s.w1());
    let w = w0 + w1;
    let mu = (s.pos0 + s.pos1) / w;
    let weight = w / total;
    if w0 == 0.0 || w1 == 0.0 {
        return GainReport {
            tau: w1 / w,
            mu,
            mu0: mu,
            mu1: mu,
            delta: 0.0,
            weight,
            weighted_delta: 0.0,
        };
    }
    let (mu0, mu1) = (s.pos0 / w0, s.pos1 / w1);
    let tau = w1 / w;
    let delta = g.value(mu) - (w0 / w) * g.value(mu0) - tau * g.value(mu1);
    GainReport {
        tau,
        mu,
        mu0,
        mu1,
        delta,
        weight,
        weighted_delta: weight * delta,
    }
}

/// Local drop in `G` at a view when splitting on `hyp`.
pub fn purity_gain(
    view: &ConditionedView<'_>,
    hyp: &Hypothesis,
    g: &dyn Impurity,
) -> Result<GainReport> {
    if view.is_degenerate() {
        return Err(Error::ZeroWeight);
    }
    Ok(gain_from_stats(
        &SplitStats::of(view, hyp),
        view.base().total(),
        g,
    ))
}

/// `(delta under g, 4 tau (1 - tau) gap^2)`; equal when `g` is Gini.
pub fn gain_identity_check_with(
    view: &ConditionedView<'_>,
    hyp: &Hypothesis,
    g: &dyn Impurity,
) -> Result<(f64, f64)> {
    let r = purity_gain(view, hyp, g)?;
    let gap = r.bias_gap();
    Ok((r.delta, 4.0 * r.tau * (1.0 - r.tau) * gap * gap))
}

pub fn gini_gain_identity_check(
    view: &ConditionedView<'_>,
    hyp: &Hypothesis,
) -> Result<(f64, f64)> {
    gain_identity_check_with(view, hyp, &ImpurityFn::gini())
}

/// `Cov[h(x), y]` at a view, from first principles.
pub fn split_covariance(view: &ConditionedView<'_>, hyp: &Hypothesis) -> Result<f64> {
    if view.is_degenerate() {
        return Err(Error::ZeroWeight);
    }
    let base = view.base();
    let (mut w, mut eh, mut ey, mut ehy) = (0.0, 0.0, 0.0, 0.0);
    for &i in view.cells() {
        let (a, b) = base.masses(i as usize);
        let h = if hyp.eval(base.point(i as usize)) {
            1.0
        } else {
            0.0
        };
        w += a + b;
        eh += h * (a + b);
        ey += b;
        ehy += h * b;
    }
    Ok(ehy / w - (eh / w) * (ey / w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropBoundCheck {
    pub delta: f64,
    pub cov: f64,
    /// `2 kappa Cov^2`, which is `16 Cov^2` for Gini.
    pub bound: f64,
    pub pass: bool,
}

pub fn covariance_drop_bound_check(
    view: &ConditionedView<'_>,
    hyp: &Hypothesis,
    g: &dyn Impurity,
) -> Result<DropBoundCheck> {
    let r = purity_gain(view, hyp, g)?;
    let cov = split_covariance(view, hyp)?;
    let bound = 2.0 * g.kappa() * cov * cov;
    Ok(DropBoundCheck {
        delta: r.delta,
        cov,
        bound,
        pass: r.delta >= bound - DROP_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(tau: f64, mu0: f64, mu1: f64) -> SplitStats {
        SplitStats {
            neg0: (1.0 - tau) * (1.0 - mu0),
            pos0: (1.0 - tau) * mu0,
            neg1: tau * (1.0 - mu1),
            pos1: tau * mu1,
        }
    }

    #[test]
    fn gini_values() {
        let g = ImpurityFn::gini();
        assert_eq!(impurity_value(&g, 0.5).unwrap(), 1.0);
        assert_eq!(impurity_value(&g, 0.0).unwrap(), 0.0);
        assert_eq!(impurity_value(&g, 0.25).unwrap(), 0.75);
        assert!(impurity_value(&g, 1.5).is_err());
    }

    #[test]
    fn shipped_kinds_pass_grid_validation() {
        for g in ImpurityFn::standard() {
            validate_on_grid(&g).unwrap();
        }
        validate_on_grid(&ImpurityFn::concave(2.0).unwrap()).unwrap();
        assert!(ImpurityFn::concave(9.0).is_err());
        assert!(ImpurityFn::concave(0.0).is_err());
    }

    #[test]
    fn parse_ids() {
        for s in ["gini", "entropy", "kmsqrt", "concave:3"] {
            let g: ImpurityFn = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("misclass".parse::<ImpurityFn>().is_err());
    }

    #[test]
    fn gain_examples() {
        let g = ImpurityFn::gini();
        let r = gain_from_stats(&stats(0.5, 0.3, 0.3), 1.0, &g);
        assert!(r.delta.abs() < 1e-15);
        let r = gain_from_stats(&stats(0.5, 0.0, 1.0), 1.0, &g);
        assert!((r.delta - 1.0).abs() < 1e-15);
        let r = gain_from_stats(&stats(0.25, 0.5, 0.0), 1.0, &g);
        assert!((r.delta - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn empty_branch_has_zero_gain() {
        let g = ImpurityFn::entropy();
        let r = gain_from_stats(&stats(0.0, 0.4, 0.9), 1.0, &g);
        assert_eq!(r.delta, 0.0);
        assert_eq!((r.mu0, r.mu1), (r.mu, r.mu));
    }
}
