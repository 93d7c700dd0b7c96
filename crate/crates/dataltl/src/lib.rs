//! Toolkit for Basic Data LTL on attributed data words.
//!
//! An attributed word is a finite sequence of positions, each carrying a set
//! of propositions and a partial map from attribute names to data values.
//! This crate provides the word model, formula ASTs with a concrete syntax,
//! a reference evaluator, a multi-attribute to single-attribute encoding,
//! register and data automata, herd analysis for the inequality until,
//! extended-word validity checking, bounded satisfiability search, and
//! reduction gadgets.

pub mod decorate;
pub mod eval;
pub mod extend;
pub mod fixtures;
pub mod formula;
pub mod generate;
pub mod herd;
pub mod parse;
pub mod word;
