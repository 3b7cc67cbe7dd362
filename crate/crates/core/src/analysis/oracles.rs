use std::fmt;

use crate::cube::{BoolFn, TruthTable};
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::tree::{tree_as_function, DecisionTree};

use super::fourier::{influences, signed_values, variance, ProductDistribution};

const ORACLE_TOL: f64 = 1e-12;

/// `lhs >= rhs` style comparison with its ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; infinite when `rhs = 0` and `lhs > 0`, 1 when both vanish.
    pub ratio: f64,
    pub pass: bool,
}

impl OracleReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        Self {
            lhs,
            rhs,
            ratio,
            pass: lhs >= rhs - ORACLE_TOL,
        }
    }
}

/// One CSV row `oracle,instance,lhs,rhs,ratio,pass`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub oracle: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl OracleRow {
    pub const HEADER: &'static str = "oracle,instance,lhs,rhs,ratio,pass";

    pub fn new(oracle: &str, instance: impl Into<String>, r: &OracleReport) -> Self {
        Self {
            oracle: oracle.to_string(),
            instance: instance.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            pass: r.pass,
        }
    }
}

impl fmt::Display for OracleRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:e},{:e},{:e},{}",
            self.oracle, self.instance, self.lhs, self.rhs, self.ratio, self.pass
        )
    }
}

fn signed_variance(f: &TruthTable, pd: &ProductDistribution) -> Result<f64> {
    Ok(variance(&signed_values(f), &pd.masses()?)?.max(0.0))
}

/// `max_i Inf_i(f)` against `Var[f] / log2 s` for the function of a size-`s` tree.
pub fn osss_oracle(
    tree: &DecisionTree,
    class: &HypothesisClass,
    pd: &ProductDistribution,
) -> Result<OracleReport> {
    check_dim(class.dim(), pd.dim())?;
    if !class.is_projection_class() {
        return Err(Error::OutOfRange(
            "OSSS oracle needs a projection class".into(),
        ));
    }
    let f = tree_as_function(tree, class)?.truth_table();
    let var = signed_variance(&f, pd)?;
    let s = tree.size() as f64;
    let rhs = if var == 0.0 { 0.0 } else { var / s.log2() };
    let lhs = influences(&f, pd)?.into_iter().fold(0.0, f64::max);
    Ok(OracleReport::new(lhs, rhs))
}

/// `max_i Inf_i(f)` against `(log2 k / k) Var[f]` under the uniform marginal,
/// with `log2 k` floored at 1 so `k = 1` stays meaningful.
pub fn kkl_oracle(f: &TruthTable, k: usize) -> Result<OracleReport> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be positive".into()));
    }
    let pd = ProductDistribution::uniform(f.dim());
    let var = signed_variance(f, &pd)?;
    let k = k as f64;
    let rhs = k.log2().max(1.0) / k * var;
    let lhs = influences(f, &pd)?.into_iter().fold(0.0, f64::max);
    Ok(OracleReport::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Label;
    use crate::targets::read_once_dnf_tree;

    #[test]
    fn dictator_is_tight() {
        let class = HypothesisClass::projections(3);
        let t = read_once_dnf_tree(&[vec![1]]);
        let r = osss_oracle(&t, &class, &ProductDistribution::uniform(3)).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (1.0, 1.0, 1.0));
        assert!(r.pass);
    }

    #[test]
    fn constant_tree_is_vacuous() {
        let class = HypothesisClass::projections(2);
        let r = osss_oracle(
            &DecisionTree::leaf(Label::ONE),
            &class,
            &ProductDistribution::uniform(2),
        )
        .unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn kkl_parity_and_dictator() {
        let par = TruthTable::from_fn(4, |x| x.bits().count_ones() % 2 == 1);
        let r = kkl_oracle(&par, 4).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert!((r.ratio - 2.0).abs() < 1e-15);
        let dict = TruthTable::from_fn(1, |x| x.get(0));
        let r = kkl_oracle(&dict, 1).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
    }
}
