//! Desk-scale computation of Choquet-style capacities and submeasures.
//!
//! The crate provides finite models where the classical constructions become
//! exactly computable: iterated-norm capacities on product trees, kernel
//! potential capacities via convex minimization, joins of submeasures by
//! exact partition search, s-dimensional cover weights by dynamic
//! programming, a truncated covering game, and a property-verification
//! suite that certifies or refutes the usual axioms with witnesses.

pub mod config;
pub mod games;
pub mod hausdorff;
pub mod join;
pub mod norms;
pub mod potential;
pub mod report;
pub mod runner;
pub mod space;
pub mod submeasure;
pub mod verify;

pub use space::{NodePath, PointSet, ProductTreeSpace, SpaceError, TreeMetric};
