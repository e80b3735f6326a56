//! Mining STL environment assumptions for black-box components.
//!
//! Input traces are labeled by whether the component's output satisfies an
//! output requirement; an interpretable STL classifier over the inputs is
//! learned from robustness features of enumerated parametric templates with
//! a decision tree, and is refined against a falsifier until no input
//! satisfying the classifier produces a violating output.

pub mod classifier;
pub mod enumeration;
pub mod falsification;
pub mod extraction;
pub mod formula;
pub mod miner;
pub mod models;
pub mod parser;
pub mod pstl;
pub mod robustness;
pub mod trace;

pub use classifier::{DecisionTree, LabeledTraces};
pub use formula::{Atom, Cmp, Expr, Formula, Interval};
pub use models::Model;
pub use parser::{parse_formula, parse_template};
pub use pstl::{ParamSpace, ParametricFormula, Term, Valuation};
pub use robustness::{robustness, satisfies};
pub use trace::TimedTrace;
