//! A multi-result supercompiler for a small first-order functional language.
//!
//! The pipeline: parse a program ([`lang`]), drive configurations while
//! systematically offering duplication-avoiding generalizations ([`drive`]),
//! build the compact set of all configuration graphs ([`engine`], [`graphset`]),
//! query that set for extremal-size graphs without enumerating it, and turn
//! selected graphs back into source programs ([`residual`]).

pub mod cli;
pub mod drive;
pub mod engine;
pub mod graphset;
pub mod lang;
pub mod residual;
