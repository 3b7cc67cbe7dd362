//! Impurity-based top-down decision tree learning on the Boolean cube,
//! with noise models, a lower-bound adversary, and brute-force oracles.

pub mod adversary;
pub mod analysis;
pub mod cube;
pub mod dist;
pub mod error;
pub mod hypothesis;
pub mod impurity;
pub mod targets;
pub mod topdown;
pub mod tree;

pub use cube::{apply_restriction, BitPoint, BoolFn, Label, Restriction, TruthTable};
pub use dist::{
    condition, make_explicit, moments, ConditionedView, Constraint, EmpiricalDist, ExplicitDist,
    LabeledDistribution, Moments,
};
pub use error::{Error, Result};
pub use hypothesis::{Hypothesis, HypothesisClass};
pub use impurity::{GainReport, Impurity, ImpurityFn, ImpurityKind};
pub use topdown::{error_curve, evaluate_error, train, TieBreak, TrainConfig, TrainTrace};
pub use tree::{tree_as_function, tree_size_and_depth, DecisionTree};
