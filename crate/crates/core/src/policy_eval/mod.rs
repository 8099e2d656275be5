//! Policy evaluation: Bellman solvers for `(I − γP)v = r` and the PageRank reductions.

mod bellman;
mod duality;
mod montecarlo;
mod reduction;

pub use bellman::{bellman_direct, BellmanSolver};
pub use duality::{check_resolvent_adjointness, AdjointnessReport};
pub use montecarlo::{mc_value, McEstimate};
pub use reduction::{
    value_undiscounted_absorbing, value_via_pagerank_general, value_via_pagerank_irreducible,
    value_via_pagerank_irreducible_with_stationary, ClassRecord, PageRankEvaluation,
    ReductionCertificate, ReductionMethod,
};

use crate::chain::SparseChain;
use crate::classes::scc_decompose;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A fixed-policy evaluation task: stochastic chain, discount and per-state reward.
#[derive(Debug, Clone)]
pub struct EvalProblem<'a, T> {
    pub chain: &'a SparseChain<T>,
    pub gamma: T,
    pub reward: Vec<T>,
}

impl<'a, T: Scalar> EvalProblem<'a, T> {
    /// Validates the problem. `γ = 1` is accepted only when every closed class is an
    /// absorbing state with zero reward, so that absorption is certain and values finite.
    pub fn new(chain: &'a SparseChain<T>, gamma: T, reward: Vec<T>) -> Result<Self> {
        if !chain.is_stochastic() {
            return Err(Error::domain("evaluation requires a stochastic chain"));
        }
        if reward.len() != chain.n() {
            return Err(Error::domain(format!(
                "reward has length {}, chain has {} states",
                reward.len(),
                chain.n()
            )));
        }
        if let Some(s) = reward.iter().position(|r| !r.is_finite()) {
            return Err(Error::domain(format!("reward at state {s} is not finite")));
        }
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::domain(format!("discount {gamma} outside [0, 1]")));
        }
        let problem = EvalProblem {
            chain,
            gamma,
            reward,
        };
        if gamma == T::one() {
            problem.check_absorbing_structure()?;
        }
        Ok(problem)
    }

    /// Skips validation; for internal solves on derived matrices whose row sums carry
    /// spectral rounding.
    pub(crate) fn unchecked(chain: &'a SparseChain<T>, gamma: T, reward: Vec<T>) -> Self {
        EvalProblem {
            chain,
            gamma,
            reward,
        }
    }

    fn check_absorbing_structure(&self) -> Result<()> {
        let classes = scc_decompose(self.chain);
        for (_, class) in classes.recurrent() {
            let s = class.states[0];
            if class.states.len() != 1 || self.chain.get(s, s) != T::one() {
                return Err(Error::domain(
                    "undiscounted evaluation requires every closed class to be an absorbing state",
                ));
            }
            if self.reward[s] != T::zero() {
                return Err(Error::domain(format!(
                    "absorbing state {s} has nonzero reward"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.chain.n()
    }

    /// `(I − γP)v − r`.
    pub fn bellman_residual_vec(&self, v: &[T]) -> Vec<T> {
        let pv = self.chain.right_mul(v);
        (0..self.n())
            .map(|s| v[s] - self.gamma * pv[s] - self.reward[s])
            .collect()
    }

    /// `‖(I − γP)v − r‖₁`.
    pub fn bellman_residual(&self, v: &[T]) -> T {
        crate::scalar::norm_l1(&self.bellman_residual_vec(v))
    }
}

/// Value vector together with its ℓ1 Bellman residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T> {
    pub v: Vec<T>,
    pub bellman_residual_l1: T,
}

impl<T: Scalar> ValueFunction<T> {
    pub(crate) fn assess(problem: &EvalProblem<'_, T>, v: Vec<T>) -> Self {
        let bellman_residual_l1 = problem.bellman_residual(&v);
        ValueFunction {
            v,
            bellman_residual_l1,
        }
    }

    pub fn mean(&self) -> T {
        if self.v.is_empty() {
            return T::zero();
        }
        self.v.iter().copied().sum::<T>() / T::from_count(self.v.len())
    }
}
