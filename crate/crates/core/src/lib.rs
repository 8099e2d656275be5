//! Policy evaluation of fixed-policy Markov decision processes through PageRank.
//!
//! The value function of a discounted chain is a rescaled PageRank vector of its time
//! reversal: with `μ` stationary for `P`, restart `u(s) = r(s)μ(s)/⟨r⟩_μ` and
//! teleportation `γ`, the PageRank `w` of `P*` gives `v(s) = ⟨r⟩_μ/(1−γ) · w(s)/μ(s)`.
//! Reducible chains are handled class by class, with transient classes reduced through a
//! quasi-stationary law and a Doob transform.
//!
//! The numerical core is generic over [`Scalar`] (`f32`, `f64`); the aliases at the crate
//! root fix `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod classes;
pub mod error;
pub mod markov;
pub mod pagerank;
pub mod policy_eval;
mod priority;
pub mod random_chains;
pub mod rng;
pub mod scalar;
pub mod sticky_walk;

pub use chain::{Distribution, SparseChain};
pub use classes::{scc_decompose, ClassDecomposition, ClassKind, CommClass, CrossBlock};
pub use error::{Error, PartialSolve, Result};
pub use markov::{
    doob_transform, quasi_stationary, reversed_doob, stationary_distribution, time_reversal,
    SpectralOptions, SpectralTriple,
};
pub use pagerank::{
    mc_pagerank, solve_linear_row, solve_pagerank, PageRankProblem, PageRankSolution, Schedule,
    SolveOptions, SolveStats,
};
pub use policy_eval::{
    bellman_direct, check_resolvent_adjointness, mc_value, value_undiscounted_absorbing,
    value_via_pagerank_general, value_via_pagerank_irreducible,
    value_via_pagerank_irreducible_with_stationary, AdjointnessReport, BellmanSolver, ClassRecord,
    EvalProblem, McEstimate, PageRankEvaluation, ReductionCertificate, ReductionMethod,
    ValueFunction,
};
pub use scalar::Scalar;

pub type Chain = SparseChain<f64>;
pub type Dist = Distribution<f64>;
pub type Triple = SpectralTriple<f64>;
pub type Classes = ClassDecomposition<f64>;
