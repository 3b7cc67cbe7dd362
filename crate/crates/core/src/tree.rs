//! Binary decision trees over a [`HypothesisClass`].
//!
//! Nodes live in an arena; ids are creation order, so the root is `0` and a
//! split of node `k` appends its `h = 0` child and then its `h = 1` child.

use std::fmt::Write as _;

use crate::cube::{BitPoint, BoolFn, Label};
use crate::dist::LabeledDistribution;
use crate::error::{check_dim, Error, Result};
use crate::hypothesis::HypothesisClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf { label: Label },
    Split { hyp: usize, zero: usize, one: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(label: Label) -> Self {
        Self {
            nodes: vec![Node::Leaf { label }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Node {
        self.nodes[id]
    }

    /// Replaces leaf `id` by a split on `hyp`; returns the `(zero, one)` children.
    pub fn split_leaf(&mut self, id: usize, hyp: usize) -> Result<(usize, usize)> {
        match self.nodes.get(id) {
            Some(Node::Leaf { label }) => {
                let label = *label;
                let zero = self.nodes.len();
                self.nodes.push(Node::Leaf { label });
                self.nodes.push(Node::Leaf { label });
                self.nodes[id] = Node::Split {
                    hyp,
                    zero,
                    one: zero + 1,
                };
                Ok((zero, zero + 1))
            }
            _ => Err(Error::OutOfRange(format!("node {id} is not a leaf"))),
        }
    }

    pub fn set_label(&mut self, id: usize, label: Label) -> Result<()> {
        match self.nodes.get_mut(id) {
            Some(Node::Leaf { label: l }) => {
                *l = label;
                Ok(())
            }
            _ => Err(Error::OutOfRange(format!("node {id} is not a leaf"))),
        }
    }

    /// Leaf ids in creation order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Leaf { .. }))
            .collect()
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.size()
    }

    /// Leaf reached by `x`. Hypothesis indices must be valid for `class`.
    #[inline]
    pub fn leaf_for(&self, class: &HypothesisClass, x: BitPoint) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split { hyp, zero, one } => {
                    id = if class.eval(hyp, x) { one } else { zero };
                }
            }
        }
    }

    #[inline]
    pub fn label_of(&self, id: usize) -> Label {
        match self.nodes[id] {
            Node::Leaf { label } => label,
            Node::Split { .. } => panic!("node {id} is internal"),
        }
    }

    pub fn eval(&self, class: &HypothesisClass, x: BitPoint) -> Result<Label> {
        check_dim(class.dim(), x.dim())?;
        self.check_class(class)?;
        Ok(self.label_of(self.leaf_for(class, x)))
    }

    /// Fails if any split references a hypothesis outside `class`.
    pub fn check_class(&self, class: &HypothesisClass) -> Result<()> {
        for n in &self.nodes {
            if let Node::Split { hyp, .. } = n {
                if *hyp >= class.len() {
                    return Err(Error::OutOfRange(format!(
                        "split on hypothesis {hyp} but class has {}",
                        class.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Depth of every node (root = 0), indexed by node id.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if let Node::Split { zero, one, .. } = self.nodes[id] {
                depth[zero] = depth[id] + 1;
                depth[one] = depth[id] + 1;
                stack.push(zero);
                stack.push(one);
            }
        }
        depth
    }

    /// Relabels every leaf by `1[mu(D_leaf) > 1/2]`; zero-weight leaves get 0.
    pub fn relabel_majority(
        &mut self,
        class: &HypothesisClass,
        dist: &LabeledDistribution,
    ) -> Result<()> {
        check_dim(class.dim(), dist.dim())?;
        self.check_class(class)?;
        let mut acc = vec![(0.0f64, 0.0f64); self.nodes.len()];
        for i in 0..dist.cell_count() {
            let leaf = self.leaf_for(class, dist.point(i));
            let (a, b) = dist.masses(i);
            acc[leaf].0 += a;
            acc[leaf].1 += b;
        }
        for id in self.leaves() {
            let (neg, pos) = acc[id];
            let label = neg + pos > 0.0 && pos / (neg + pos) > 0.5;
            self.nodes[id] = Node::Leaf {
                label: Label(label),
            };
        }
        Ok(())
    }

    /// Preorder text form: `node split=<id>` / `leaf label=<0|1>`, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { label } => {
                    let _ = writeln!(out, "leaf label={}", label.value());
                }
                Node::Split { hyp, zero, one } => {
                    let _ = writeln!(out, "node split={hyp}");
                    stack.push(one);
                    stack.push(zero);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        enum Item {
            Leaf(Label),
            Split(usize),
        }
        let mut items = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            if let Some(v) = line.strip_prefix("leaf label=") {
                let v: u8 = v.parse().map_err(|_| perr("bad label"))?;
                items.push(Item::Leaf(
                    Label::from_value(v).map_err(|_| perr("bad label"))?,
                ));
            } else if let Some(v) = line.strip_prefix("node split=") {
                items.push(Item::Split(v.parse().map_err(|_| perr("bad split id"))?));
            } else {
                return Err(perr("expected `node split=` or `leaf label=`"));
            }
        }
        if items.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty tree".into(),
            });
        }
        // Rebuild in preorder; `pending` holds (parent, is_one_child) slots.
        let mut nodes: Vec<Node> = Vec::with_capacity(items.len());
        let mut pending: Vec<(usize, bool)> = Vec::new();
        for (k, item) in items.iter().enumerate() {
            let id = nodes.len();
            if k > 0 {
                let Some((parent, is_one)) = pending.pop() else {
                    return Err(Error::Parse {
                        line: k + 1,
                        msg: "trailing nodes after complete tree".into(),
                    });
                };
                if let Node::Split { zero, one, .. } = &mut nodes[parent] {
                    if is_one {
                        *one = id;
                    } else {
                        *zero = id;
                    }
                }
            }
            match *item {
                Item::Leaf(label) => nodes.push(Node::Leaf { label }),
                Item::Split(hyp) => {
                    nodes.push(Node::Split {
                        hyp,
                        zero: usize::MAX,
                        one: usize::MAX,
                    });
                    pending.push((id, true));
                    pending.push((id, false));
                }
            }
        }
        if !pending.is_empty() {
            return Err(Error::Parse {
                line: items.len(),
                msg: "incomplete tree".into(),
            });
        }
        Ok(Self { nodes })
    }
}

/// A tree paired with its hypothesis class, usable as a predicate.
pub struct TreeFn<'a> {
    pub tree: &'a DecisionTree,
    pub class: &'a HypothesisClass,
}

impl BoolFn for TreeFn<'_> {
    fn dim(&self) -> usize {
        self.class.dim()
    }
    fn eval(&self, x: BitPoint) -> bool {
        self.tree.label_of(self.tree.leaf_for(self.class, x)).0
    }
}

pub fn tree_as_function<'a>(
    tree: &'a DecisionTree,
    class: &'a HypothesisClass,
) -> Result<TreeFn<'a>> {
    tree.check_class(class)?;
    Ok(TreeFn { tree, class })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeShape {
    pub leaves: usize,
    pub max_depth: usize,
    pub expected_depth: f64,
}

/// Leaf count, maximum depth and expected leaf depth under `dist`.
pub fn tree_size_and_depth(
    tree: &DecisionTree,
    class: &HypothesisClass,
    dist: &LabeledDistribution,
) -> Result<TreeShape> {
    check_dim(class.dim(), dist.dim())?;
    tree.check_class(class)?;
    let depths = tree.depths();
    let max_depth = tree.leaves().iter().map(|&l| depths[l]).max().unwrap_or(0);
    let total = dist.total();
    let mut expected = 0.0;
    for i in 0..dist.cell_count() {
        let (a, b) = dist.masses(i);
        expected += (a + b) * depths[tree.leaf_for(class, dist.point(i))] as f64;
    }
    Ok(TreeShape {
        leaves: tree.size(),
        max_depth,
        expected_depth: expected / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{all_points, TruthTable};
    use crate::dist::ExplicitDist;

    fn uniform(dim: usize) -> LabeledDistribution {
        ExplicitDist::uniform_with(&TruthTable::constant(dim, false))
            .unwrap()
            .into()
    }

    #[test]
    fn single_leaf_is_constant() {
        let t = DecisionTree::leaf(Label::ONE);
        let c = HypothesisClass::projections(3);
        assert!(all_points(3).all(|x| t.eval(&c, x).unwrap() == Label::ONE));
        let s = tree_size_and_depth(&t, &c, &uniform(3)).unwrap();
        assert_eq!((s.leaves, s.max_depth, s.expected_depth), (1, 0, 0.0));
    }

    #[test]
    fn root_split_matches_projection() {
        let mut t = DecisionTree::leaf(Label::ZERO);
        let (_, one) = t.split_leaf(0, 0).unwrap();
        t.set_label(one, Label::ONE).unwrap();
        let c = HypothesisClass::projections(2);
        for x in all_points(2) {
            assert_eq!(t.eval(&c, x).unwrap().0, x.get(0));
        }
        assert_eq!(t.size(), t.internal_count() + 1);
    }

    #[test]
    fn complete_and_path_tree_depths() {
        let c = HypothesisClass::projections(3);
        let mut t = DecisionTree::leaf(Label::ZERO);
        let (a, b) = t.split_leaf(0, 0).unwrap();
        t.split_leaf(a, 1).unwrap();
        t.split_leaf(b, 1).unwrap();
        let s = tree_size_and_depth(&t, &c, &uniform(3)).unwrap();
        assert_eq!((s.leaves, s.max_depth, s.expected_depth), (4, 2, 2.0));

        let mut p = DecisionTree::leaf(Label::ZERO);
        let (_, one) = p.split_leaf(0, 0).unwrap();
        let (_, one) = p.split_leaf(one, 1).unwrap();
        p.split_leaf(one, 2).unwrap();
        let s = tree_size_and_depth(&p, &c, &uniform(3)).unwrap();
        assert_eq!(s.leaves, 4);
        assert_eq!(s.expected_depth, 1.0 * 0.5 + 2.0 * 0.25 + 3.0 * 0.25);
    }

    #[test]
    fn text_roundtrip_preserves_function() {
        let c = HypothesisClass::projections(3);
        let mut t = DecisionTree::leaf(Label::ZERO);
        let (a, b) = t.split_leaf(0, 2).unwrap();
        let (_, a1) = t.split_leaf(a, 0).unwrap();
        t.set_label(a1, Label::ONE).unwrap();
        t.set_label(b, Label::ONE).unwrap();
        let text = t.to_text();
        assert_eq!(
            text,
            "node split=2\nnode split=0\nleaf label=0\nleaf label=1\nleaf label=1\n"
        );
        let back = DecisionTree::from_text(&text).unwrap();
        let f = tree_as_function(&t, &c).unwrap().truth_table();
        let g = tree_as_function(&back, &c).unwrap().truth_table();
        assert_eq!(f, g);
        assert!(DecisionTree::from_text("node split=1\nleaf label=0\n").is_err());
        assert!(DecisionTree::from_text("leaf label=0\nleaf label=1\n").is_err());
    }

    #[test]
    fn eval_rejects_dim_mismatch() {
        let t = DecisionTree::leaf(Label::ONE);
        let c = HypothesisClass::projections(3);
        let x = BitPoint::from_bitstring("10").unwrap();
        assert!(matches!(t.eval(&c, x), Err(Error::DimMismatch { .. })));
    }
}
