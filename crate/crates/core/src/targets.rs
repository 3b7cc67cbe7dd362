//! Target functions: Tribes, majority, dictators and random monotone trees.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::ProductDistribution;
use crate::cube::{BitPoint, BoolFn, Label, TruthTable, MAX_EXPLICIT_DIM};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::tree::{tree_as_function, DecisionTree, Node};

/// Tries allowed to the rejection sampler before giving up.
pub const REJECTION_BUDGET: usize = 100_000;

fn check_explicit_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_EXPLICIT_DIM {
        return Err(Error::OutOfRange(format!(
            "dimension {d} not in 1..={MAX_EXPLICIT_DIM}"
        )));
    }
    Ok(())
}

/// `Tribes_{w,s}` on `w*s` coordinates; term `j` reads coordinates `j*w..(j+1)*w`.
pub fn tribes(w: usize, s: usize) -> Result<TruthTable> {
    if w == 0 || s == 0 {
        return Err(Error::OutOfRange("tribes needs w, s >= 1".into()));
    }
    check_explicit_dim(w * s)?;
    let term = (1u64 << w) - 1;
    Ok(TruthTable::from_fn(w * s, |x| {
        (0..s).any(|j| (x.bits() >> (j * w)) & term == term)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TribesClosedForm {
    /// `Pr[Tribes = -1] = (1 - 2^-w)^s`.
    pub pr_false: f64,
    /// `Pr[Tribes = -1] / (2^w - 1)`, which is `E[x_i * 1[Tribes = +1]]`.
    pub corr_label: f64,
    /// `E[x_i * Tribes]` in the signed view; twice `corr_label`.
    pub corr_signed: f64,
}

pub fn tribes_closed_forms(w: usize, s: usize) -> TribesClosedForm {
    let pr_false = (1.0 - (-(w as f64)).exp2()).powi(s as i32);
    let corr_label = pr_false / ((w as f64).exp2() - 1.0);
    TribesClosedForm {
        pr_false,
        corr_label,
        corr_signed: 2.0 * corr_label,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TribesParams {
    pub w: usize,
    pub s: usize,
    pub k: usize,
}

/// Largest `s` with `(1 - 2^-w)^s >= eps`.
pub fn tribes_term_count(w: usize, eps: f64) -> usize {
    let base = 1.0 - (-(w as f64)).exp2();
    let mut s = (eps.ln() / base.ln()).floor().max(0.0) as usize;
    while s > 0 && base.powi(s as i32) < eps {
        s -= 1;
    }
    while base.powi(s as i32 + 1) >= eps {
        s += 1;
    }
    s
}

/// Widest Tribes with `min_b Pr[g = b] >= eps` on at most `d` variables.
pub fn tribes_params_for(eps: f64, d: usize) -> Result<TribesParams> {
    if !(eps > 0.0 && eps <= 1.0 / 3.0) {
        return Err(Error::InfeasibleParameters(format!(
            "eps {eps} not in (0, 1/3]"
        )));
    }
    if (d as f64) < (1.0 / eps).log2() {
        return Err(Error::InfeasibleParameters(format!(
            "d = {d} < log2(1/eps)"
        )));
    }
    let mut best = None;
    for w in 1..=d {
        let s = tribes_term_count(w, eps);
        if s == 0 || w * s > d {
            break;
        }
        best = Some(TribesParams { w, s, k: w * s });
    }
    best.ok_or_else(|| Error::InfeasibleParameters(format!("no Tribes fits d = {d}")))
}

/// `f(x) = g(x_1..x_k)` extended to `d >= k` coordinates.
pub fn embed(g: &TruthTable, d: usize) -> Result<TruthTable> {
    check_explicit_dim(d)?;
    if g.dim() > d {
        return Err(Error::DimMismatch {
            expected: d,
            found: g.dim(),
        });
    }
    let mask = (1u64 << g.dim()) - 1;
    Ok(TruthTable::from_fn(d, |x| g.get(x.bits() & mask)))
}

pub fn projection(i: usize, d: usize) -> Result<TruthTable> {
    check_explicit_dim(d)?;
    if i >= d {
        return Err(Error::OutOfRange(format!("coordinate {i} in dim {d}")));
    }
    Ok(TruthTable::from_fn(d, |x| x.get(i)))
}

/// Majority of the first `k` coordinates; ties (even `k`) go to 0.
pub fn majority(k: usize, d: usize) -> Result<TruthTable> {
    check_explicit_dim(d)?;
    if k == 0 || k > d {
        return Err(Error::OutOfRange(format!("majority of {k} in dim {d}")));
    }
    let mask = (1u64 << k) - 1;
    Ok(TruthTable::from_fn(d, |x| {
        2 * (x.bits() & mask).count_ones() as usize > k
    }))
}

pub fn product_distribution(p: &[f64]) -> Result<ProductDistribution> {
    ProductDistribution::new(p.to_vec())
}

pub fn uniform(d: usize) -> ProductDistribution {
    ProductDistribution::uniform(d)
}

/// Decision tree for a read-once monotone DNF over projection hypotheses.
/// Each term is tested variable by variable; a failed test moves on to the
/// remaining terms.
pub fn read_once_dnf_tree(terms: &[Vec<usize>]) -> DecisionTree {
    fn grow(tree: &mut DecisionTree, leaf: usize, terms: &[Vec<usize>]) {
        let Some((first, rest)) = terms.split_first() else {
            return;
        };
        let mut at = leaf;
        for &v in first {
            let (zero, one) = tree.split_leaf(at, v).expect("fresh leaf");
            grow(tree, zero, rest);
            at = one;
        }
        tree.set_label(at, Label::ONE).expect("fresh leaf");
    }
    let mut tree = DecisionTree::leaf(Label::ZERO);
    grow(&mut tree, 0, terms);
    tree
}

/// Leaf count of [`read_once_dnf_tree`] for the given term widths.
pub fn read_once_dnf_size(widths: &[usize]) -> usize {
    match widths.split_first() {
        None => 1,
        Some((w, rest)) => 1 + w * read_once_dnf_size(rest),
    }
}

/// Random tree with exactly `s` leaves (fewer if every path runs out of
/// coordinates), projection splits and uniform leaf labels.
pub fn random_decision_tree(d: usize, s: usize, rng: &mut impl Rng) -> Result<DecisionTree> {
    if d == 0 || s == 0 {
        return Err(Error::OutOfRange("random tree needs d, s >= 1".into()));
    }
    let mut tree = DecisionTree::leaf(Label::ZERO);
    let mut used: Vec<Vec<usize>> = vec![Vec::new()];
    let mut open = vec![0usize];
    while tree.size() < s && !open.is_empty() {
        let pick = rng.random_range(0..open.len());
        let leaf = open[pick];
        let free: Vec<usize> = (0..d).filter(|i| !used[leaf].contains(i)).collect();
        if free.is_empty() {
            open.swap_remove(pick);
            continue;
        }
        let v = free[rng.random_range(0..free.len())];
        let (z, o) = tree.split_leaf(leaf, v)?;
        let mut path = used[leaf].clone();
        path.push(v);
        used.resize(o + 1, Vec::new());
        used[z] = path.clone();
        used[o] = path;
        open.swap_remove(pick);
        open.push(z);
        open.push(o);
    }
    for leaf in tree.leaves() {
        tree.set_label(leaf, Label(rng.random()))?;
    }
    Ok(tree)
}

/// True when the function computed by `tree` is monotone, checked on the
/// sub-cube of coordinates the tree reads.
pub fn tree_is_monotone(tree: &DecisionTree) -> bool {
    let mut vars: Vec<usize> = tree
        .nodes()
        .iter()
        .filter_map(|n| match n {
            Node::Split { hyp, .. } => Some(*hyp),
            Node::Leaf { .. } => None,
        })
        .collect();
    vars.sort_unstable();
    vars.dedup();
    if vars.is_empty() {
        return true;
    }
    let d = vars.iter().max().unwrap() + 1;
    let class = HypothesisClass::projections(d);
    let table = TruthTable::from_fn(vars.len(), |y| {
        let mut bits = 0u64;
        for (j, &v) in vars.iter().enumerate() {
            if y.get(j) {
                bits |= 1 << v;
            }
        }
        let x = BitPoint::new(bits, d).expect("bits fit");
        tree.label_of(tree.leaf_for(&class, x)).0
    });
    table.is_monotone()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotoneGenerator {
    ReadOnceDnf,
    RejectionSampledTree,
}

impl fmt::Display for MonotoneGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonotoneGenerator::ReadOnceDnf => "read-once-dnf",
            MonotoneGenerator::RejectionSampledTree => "rejection-sampled-tree",
        })
    }
}

impl std::str::FromStr for MonotoneGenerator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "read-once-dnf" => Ok(MonotoneGenerator::ReadOnceDnf),
            "rejection-sampled-tree" => Ok(MonotoneGenerator::RejectionSampledTree),
            other => Err(Error::OutOfRange(format!("unknown generator `{other}`"))),
        }
    }
}

/// A target with its truth table and a decision-tree representation over
/// coordinate projections.
#[derive(Clone, Debug)]
pub struct TreeTarget {
    pub table: TruthTable,
    pub tree: DecisionTree,
    pub class: HypothesisClass,
}

impl TreeTarget {
    fn from_tree(d: usize, tree: DecisionTree) -> Result<Self> {
        let class = HypothesisClass::projections(d);
        let table = tree_as_function(&tree, &class)?.truth_table();
        Ok(Self { table, tree, class })
    }

    pub fn size(&self) -> usize {
        self.tree.size()
    }
}

/// Random non-constant monotone function with a decision tree of at most `s` leaves.
pub fn random_monotone_target(
    d: usize,
    s: usize,
    seed: u64,
    generator: MonotoneGenerator,
) -> Result<TreeTarget> {
    check_explicit_dim(d)?;
    if s < 2 {
        return Err(Error::OutOfRange(
            "a non-constant target needs s >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match generator {
        MonotoneGenerator::ReadOnceDnf => {
            let mut coords: Vec<usize> = (0..d).collect();
            coords.shuffle(&mut rng);
            let mut widths: Vec<usize> = Vec::new();
            let mut used = 0;
            loop {
                let room = d - used;
                if room == 0 {
                    break;
                }
                let w = rng.random_range(1..=room.min(3));
                let mut next = widths.clone();
                next.push(w);
                if read_once_dnf_size(&next) > s {
                    // A narrower term may still fit.
                    next.pop();
                    next.push(1);
                    if read_once_dnf_size(&next) > s {
                        break;
                    }
                }
                used += next[next.len() - 1];
                widths = next;
            }
            let mut terms = Vec::new();
            let mut at = 0;
            for w in widths {
                terms.push(coords[at..at + w].to_vec());
                at += w;
            }
            TreeTarget::from_tree(d, read_once_dnf_tree(&terms))
        }
        MonotoneGenerator::RejectionSampledTree => {
            for _ in 0..REJECTION_BUDGET {
                let size = rng.random_range(2..=s);
                let tree = random_decision_tree(d, size, &mut rng)?;
                let labels: Vec<bool> = tree.leaves().iter().map(|&l| tree.label_of(l).0).collect();
                if labels.iter().all(|&b| b == labels[0]) || !tree_is_monotone(&tree) {
                    continue;
                }
                let target = TreeTarget::from_tree(d, tree)?;
                if target.table.is_constant() {
                    continue;
                }
                return Ok(target);
            }
            Err(Error::GenerationFailed(format!(
                "no monotone tree with <= {s} leaves after {REJECTION_BUDGET} tries"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    Tribes {
        w: usize,
        s: usize,
    },
    Projection {
        coord: usize,
    },
    Majority {
        k: usize,
    },
    RandomMonotoneDt {
        size: usize,
        generator: MonotoneGenerator,
    },
    ReadOnceMonotoneDnf {
        size: usize,
    },
}

/// A reproducible target description.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub seed: u64,
}

/// A materialized target.
#[derive(Clone, Debug)]
pub struct BuiltTarget {
    pub table: TruthTable,
    /// Explicit tree representation, when one is part of the construction.
    pub tree: Option<DecisionTree>,
    pub claimed_size: Option<usize>,
    pub monotone: bool,
}

impl TargetSpec {
    pub fn build(&self, d: usize) -> Result<BuiltTarget> {
        let monotone_tree = |t: TreeTarget, size: usize| BuiltTarget {
            table: t.table,
            tree: Some(t.tree),
            claimed_size: Some(size),
            monotone: true,
        };
        let plain = |table: TruthTable| BuiltTarget {
            table,
            tree: None,
            claimed_size: None,
            monotone: true,
        };
        Ok(match &self.kind {
            TargetKind::Tribes { w, s } => plain(embed(&tribes(*w, *s)?, d)?),
            TargetKind::Projection { coord } => {
                let tree = read_once_dnf_tree(&[vec![*coord]]);
                BuiltTarget {
                    table: projection(*coord, d)?,
                    tree: Some(tree),
                    claimed_size: Some(2),
                    monotone: true,
                }
            }
            TargetKind::Majority { k } => plain(majority(*k, d)?),
            TargetKind::RandomMonotoneDt { size, generator } => monotone_tree(
                random_monotone_target(d, *size, self.seed, *generator)?,
                *size,
            ),
            TargetKind::ReadOnceMonotoneDnf { size } => monotone_tree(
                random_monotone_target(d, *size, self.seed, MonotoneGenerator::ReadOnceDnf)?,
                *size,
            ),
        })
    }

    /// Flat `target.*` key/value pairs.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push((format!("target.{k}"), v));
        match &self.kind {
            TargetKind::Tribes { w, s } => {
                put("kind", "tribes".into());
                put("w", w.to_string());
                put("s", s.to_string());
            }
            TargetKind::Projection { coord } => {
                put("kind", "projection".into());
                put("coord", coord.to_string());
            }
            TargetKind::Majority { k } => {
                put("kind", "majority".into());
                put("k", k.to_string());
            }
            TargetKind::RandomMonotoneDt { size, generator } => {
                put("kind", "random-monotone-dt".into());
                put("size", size.to_string());
                put("generator", generator.to_string());
            }
            TargetKind::ReadOnceMonotoneDnf { size } => {
                put("kind", "read-once-dnf".into());
                put("size", size.to_string());
            }
        }
        put("seed", self.seed.to_string());
        out
    }

    /// Inverse of [`TargetSpec::to_pairs`]; missing keys take defaults.
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        fn num(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
            match map.get(&format!("target.{key}")) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::OutOfRange(format!("target.{key} = `{v}`"))),
            }
        }
        let kind = map
            .get("target.kind")
            .map(String::as_str)
            .unwrap_or("random-monotone-dt");
        let kind = match kind.trim() {
            "tribes" => TargetKind::Tribes {
                w: num(map, "w", 2)?,
                s: num(map, "s", 2)?,
            },
            "projection" => TargetKind::Projection {
                coord: num(map, "coord", 0)?,
            },
            "majority" => TargetKind::Majority {
                k: num(map, "k", 3)?,
            },
            "random-monotone-dt" => TargetKind::RandomMonotoneDt {
                size: num(map, "size", 8)?,
                generator: map
                    .get("target.generator")
                    .map(|g| g.parse())
                    .transpose()?
                    .unwrap_or(MonotoneGenerator::RejectionSampledTree),
            },
            "read-once-dnf" => TargetKind::ReadOnceMonotoneDnf {
                size: num(map, "size", 8)?,
            },
            other => return Err(Error::OutOfRange(format!("unknown target kind `{other}`"))),
        };
        Ok(Self {
            kind,
            seed: num(map, "seed", 0)? as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::all_points;

    #[test]
    fn tribes_one_one_is_dictator() {
        assert_eq!(tribes(1, 1).unwrap(), projection(0, 1).unwrap());
    }

    #[test]
    fn tribes_two_two_counts() {
        let t = tribes(2, 2).unwrap();
        assert_eq!(16 - t.count_ones(), 9);
        let cf = tribes_closed_forms(2, 2);
        assert_eq!(cf.pr_false, 9.0 / 16.0);
        assert_eq!(cf.corr_label, 3.0 / 16.0);
    }

    #[test]
    fn params_examples() {
        assert_eq!(
            tribes_params_for(0.1, 4).unwrap(),
            TribesParams { w: 1, s: 3, k: 3 }
        );
        assert_eq!(
            tribes_params_for(1.0 / 3.0, 2).unwrap(),
            TribesParams { w: 1, s: 1, k: 1 }
        );
        assert_eq!(tribes_term_count(2, 0.1), 8);
        assert!(tribes_params_for(0.5, 4).is_err());
        assert!(tribes_params_for(0.1, 3).is_err());
    }

    #[test]
    fn dnf_tree_sizes() {
        assert_eq!(read_once_dnf_size(&[1, 1]), 3);
        let t = read_once_dnf_tree(&[vec![0], vec![1]]);
        assert_eq!(t.size(), 3);
        let class = HypothesisClass::projections(2);
        for x in all_points(2) {
            assert_eq!(t.eval(&class, x).unwrap().0, x.get(0) || x.get(1));
        }
        let tt = read_once_dnf_tree(&[vec![0, 1], vec![2, 3]]);
        let f = tree_as_function(&tt, &HypothesisClass::projections(4))
            .unwrap()
            .truth_table();
        assert_eq!(f, tribes(2, 2).unwrap());
    }

    #[test]
    fn size_two_monotone_is_dictator() {
        for gen in [
            MonotoneGenerator::ReadOnceDnf,
            MonotoneGenerator::RejectionSampledTree,
        ] {
            for seed in 0..10 {
                let t = random_monotone_target(5, 2, seed, gen).unwrap();
                assert_eq!(t.table.relevant_coordinates().len(), 1);
                let i = t.table.relevant_coordinates()[0];
                assert_eq!(t.table, projection(i, 5).unwrap());
            }
        }
    }

    #[test]
    fn spec_pairs_roundtrip() {
        let spec = TargetSpec {
            kind: TargetKind::RandomMonotoneDt {
                size: 8,
                generator: MonotoneGenerator::ReadOnceDnf,
            },
            seed: 42,
        };
        let map: BTreeMap<_, _> = spec.to_pairs().into_iter().collect();
        assert_eq!(TargetSpec::from_pairs(&map).unwrap(), spec);
    }
}
