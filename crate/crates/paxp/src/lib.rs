//! Probabilistic abductive explanations for discrete classifiers.
//!
//! An abductive explanation (AXp) of a classification is a set of features
//! that, once fixed to their observed values, forces the predicted class on
//! every completion of the remaining features. Its probabilistic relaxation
//! asks only that the class be kept on at least a fraction δ of completions,
//! measured under uniform, independent feature draws. This crate computes
//! those sets exactly: model counts are big integers, precisions are
//! rationals, and every δ comparison is an integer cross-multiplication.
//!
//! Supported model families: decision trees, naive Bayes classifiers (via a
//! pseudo-Boolean translation and a counting knapsack), ordered
//! multi-valued/binary decision diagrams, free-form decision graphs, and
//! smooth(able) deterministic decomposable negation normal form circuits.
//! Every family implements the same [`Backend`] counting contract, and the
//! procedures in [`engine`] work uniformly on top of it. [`oracle`] holds a
//! brute-force enumerator used to cross-check all of the above.

pub mod ddg;
pub mod ddnnf;
pub mod dtree;
pub mod engine;
pub mod fixtures;
pub mod io;
pub mod nbc;
pub mod oracle;
pub mod report;
pub mod synth;
pub mod types;

pub use types::{
    Backend, ClassifierMeta, CountPair, Error, FeatureSet, Instance, Rational, Result, Threshold,
};
