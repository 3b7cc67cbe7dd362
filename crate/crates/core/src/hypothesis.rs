//! Splitting functions available to the learner.

use std::sync::Arc;

use crate::cube::{BitPoint, BoolFn, TruthTable};
use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    /// `proj_i(x) = 1[x_i = +1]`.
    Projection(usize),
    Table(Arc<TruthTable>),
}

impl Hypothesis {
    #[inline]
    pub fn eval(&self, x: BitPoint) -> bool {
        match self {
            Hypothesis::Projection(i) => x.get(*i),
            Hypothesis::Table(t) => t.get(x.bits()),
        }
    }
}

/// Finite, indexed family of predicates. Index order is the tie-breaking order.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisClass {
    dim: usize,
    items: Vec<Hypothesis>,
    names: Vec<String>,
}

impl HypothesisClass {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            items: Vec::new(),
            names: Vec::new(),
        }
    }

    /// `{proj_1, ..., proj_d}`.
    pub fn projections(dim: usize) -> Self {
        let mut c = Self::empty(dim);
        for i in 0..dim {
            c.items.push(Hypothesis::Projection(i));
            c.names.push(format!("proj{}", i + 1));
        }
        c
    }

    pub fn push_table(&mut self, name: impl Into<String>, table: TruthTable) -> Result<usize> {
        check_dim(self.dim, table.dim())?;
        self.items.push(Hypothesis::Table(Arc::new(table)));
        self.names.push(name.into());
        Ok(self.items.len() - 1)
    }

    pub fn push_projection(&mut self, coord: usize) -> Result<usize> {
        if coord >= self.dim {
            return Err(Error::OutOfRange(format!(
                "projection {coord} in dim {}",
                self.dim
            )));
        }
        self.items.push(Hypothesis::Projection(coord));
        self.names.push(format!("proj{}", coord + 1));
        Ok(self.items.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&Hypothesis> {
        self.items.get(idx)
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Hypothesis> {
        self.items.iter()
    }

    /// True when every member is a coordinate projection and each
    /// coordinate appears exactly once, in order.
    pub fn is_projection_class(&self) -> bool {
        self.items.len() == self.dim
            && self
                .items
                .iter()
                .enumerate()
                .all(|(i, h)| matches!(h, Hypothesis::Projection(j) if *j == i))
    }

    #[inline]
    pub fn eval(&self, idx: usize, x: BitPoint) -> bool {
        self.items[idx].eval(x)
    }
}

/// A single member of a class viewed as a predicate.
pub struct Member<'a> {
    pub class: &'a HypothesisClass,
    pub idx: usize,
}

impl BoolFn for Member<'_> {
    fn dim(&self) -> usize {
        self.class.dim
    }
    fn eval(&self, x: BitPoint) -> bool {
        self.class.eval(self.idx, x)
    }
}
