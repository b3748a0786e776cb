//! Exact computational kernel for filtered manifolds.
//!
//! A filtered manifold carries a flag of subbundles `H^1 ≤ … ≤ H^N = TM`
//! whose section modules close under Lie brackets.  This crate models such
//! manifolds concretely as polynomial vector-field frames on a single
//! coordinate chart and computes, in exact rational arithmetic wherever the
//! objects are algebraic:
//!
//! - the graded nilpotent Lie algebras osculating the filtration, with their
//!   Baker-Campbell-Hausdorff group law and dilations ([`graded_algebra`]),
//! - the filtration validity checks and pointwise osculating algebras
//!   ([`filtration`]),
//! - the module of sections of the tangent Lie algebroid, the evaluation
//!   maps at `t ≠ 0` and `t = 0`, and the splitting-dependent isomorphism
//!   with graded sections ([`tangent_algebroid`]),
//! - graded connections, geodesic and groupoid exponentials, and the global
//!   exponential charts that glue the pair groupoids at `t ≠ 0` to the
//!   osculating group bundle at `t = 0` ([`exponential_charts`]).
//!
//! Floating point enters only in the geodesic integrator and the chart
//! inversion; everything else is `BigRational` arithmetic, so the algebraic
//! identities in the test suite hold exactly, not up to tolerance.
//!
//! The `examples/` directory walks through each capability; the `carnot`
//! binary exposes the same machinery behind a manifest-driven CLI.

pub mod bundled;
pub mod cli;
pub mod exponential_charts;
pub mod filtration;
pub mod graded_algebra;
pub mod linalg;
pub mod manifest;
pub mod polyfields;
pub mod rational;
pub mod report;
pub mod sampling;
pub mod tangent_algebroid;

pub use graded_algebra::{AlgebraVector, GradedNilpotentLieAlgebra};
pub use polyfields::{PolyVectorField, Polynomial, VarSet};
pub use filtration::{FilteredChart, Splitting, ValidatedChart};
pub use tangent_algebroid::{GradedSection, HSection};
pub use exponential_charts::{ChartDomain, GradedConnection, TangentGroupoidElement};
pub use rational::Rat;
