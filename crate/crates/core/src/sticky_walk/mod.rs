//! The controlled sticky random walk: at node `x` the walker stays with probability `α_x`
//! and otherwise jumps to a uniform neighbour, collecting `β_x − κα_x/(1 − α_x)` per step.

mod graph;

pub use graph::{
    er_default_p, er_graph, er_graph_full, grid_center, grid_graph, pa_graph, ErSample,
    UndirectedGraph,
};

use rand::Rng;

use crate::chain::{Distribution, SparseChain};
use crate::error::{Error, Result};
use crate::pagerank::{Schedule, SolveStats};
use crate::policy_eval::{
    bellman_direct, value_via_pagerank_irreducible_with_stationary, BellmanSolver, EvalProblem,
};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Cap on the stickiness; keeps the chain irreducible and the cost bounded.
pub const ALPHA_MAX: f64 = 0.95;

/// Policy iteration stops once no stickiness moves by this much.
pub const POLICY_CHANGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StickyWalkModel<T> {
    pub graph: UndirectedGraph,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub kappa: T,
    pub gamma: T,
}

impl<T: Scalar> StickyWalkModel<T> {
    pub fn new(
        graph: UndirectedGraph,
        alpha: Vec<T>,
        beta: Vec<T>,
        kappa: T,
        gamma: T,
    ) -> Result<Self> {
        let n = graph.n();
        if alpha.len() != n || beta.len() != n {
            return Err(Error::domain("alpha and beta need one entry per node"));
        }
        if let Some(x) = alpha
            .iter()
            .position(|&a| !(a >= T::zero() && a <= T::lit(ALPHA_MAX)))
        {
            return Err(Error::domain(format!(
                "alpha at node {x} outside [0, {ALPHA_MAX}]"
            )));
        }
        if let Some(x) = beta
            .iter()
            .position(|&b| !(b >= T::zero() && b.is_finite()))
        {
            return Err(Error::domain(format!(
                "beta at node {x} must be finite and nonnegative"
            )));
        }
        if !(kappa > T::zero() && kappa.is_finite()) {
            return Err(Error::domain("kappa must be positive"));
        }
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::domain("discount must lie in [0, 1)"));
        }
        Ok(StickyWalkModel {
            graph,
            alpha,
            beta,
            kappa,
            gamma,
        })
    }

    /// Same model under a different stickiness vector.
    pub fn with_alpha(&self, alpha: Vec<T>) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            alpha,
            self.beta.clone(),
            self.kappa,
            self.gamma,
        )
    }

    /// `c(α) = κα/(1 − α)`.
    pub fn cost(&self, alpha: T) -> T {
        self.kappa * alpha / (T::one() - alpha)
    }

    pub fn reward(&self) -> Vec<T> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| b - self.cost(a))
            .collect()
    }

    /// Transition matrix `P(x,x) = α_x`, `P(x,y) = (1 − α_x)/d_x`, and the reward vector.
    pub fn build_chain(&self) -> Result<(SparseChain<T>, Vec<T>)> {
        let g = &self.graph;
        let mut rows = Vec::with_capacity(g.n());
        for x in 0..g.n() {
            let d = g.degree(x);
            if d == 0 {
                return Err(Error::domain(format!("node {x} is isolated")));
            }
            let a = self.alpha[x];
            let jump = (T::one() - a) / T::from_count(d);
            let mut row = Vec::with_capacity(d + 1);
            if a > T::zero() {
                row.push((x, a));
            }
            row.extend(g.neighbors(x).iter().map(|&y| (y, jump)));
            rows.push(row);
        }
        Ok((SparseChain::from_rows(rows)?, self.reward()))
    }

    /// `μ(x) ∝ d_x / (1 − α_x)`.
    pub fn closed_form_stationary(&self) -> Distribution<T> {
        let w = (0..self.graph.n())
            .map(|x| T::from_count(self.graph.degree(x)) / (T::one() - self.alpha[x]))
            .collect();
        Distribution::normalized(w).expect("degrees are nonnegative")
    }

    /// Greedy stickiness against `v`: per node the maximizer over `[0, α_max]` of
    /// `β − κα/(1 − α) + γ(α v(x) + (1 − α) v̄_x)`, with `v̄_x` the neighbour mean. The
    /// objective is concave with stationary point `1 − sqrt(κ/(γ(v(x) − v̄_x)))`.
    pub fn improve_policy(&self, v: &[T]) -> Vec<T> {
        let g = &self.graph;
        (0..g.n())
            .map(|x| {
                let nb = g.neighbors(x);
                if nb.is_empty() {
                    return T::zero();
                }
                let vbar = nb.iter().map(|&y| v[y]).sum::<T>() / T::from_count(nb.len());
                let gain = self.gamma * (v[x] - vbar);
                if gain > self.kappa {
                    (T::one() - (self.kappa / gain).sqrt())
                        .max(T::zero())
                        .min(T::lit(ALPHA_MAX))
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    /// `β_x ~ Unif[0, 1)` i.i.d.
    UniformRandom,
    /// `β_x = 1/(d(x, target) + 1)`, zero where the target is unreachable.
    DistanceToTarget(usize),
}

pub fn reward_model<T: Scalar>(
    graph: &UndirectedGraph,
    kind: RewardKind,
    seed: u64,
) -> Result<Vec<T>> {
    match kind {
        RewardKind::UniformRandom => {
            let mut rng = seeded(seed);
            Ok((0..graph.n())
                .map(|_| T::lit(rng.random::<f64>()))
                .collect())
        }
        RewardKind::DistanceToTarget(target) => {
            if target >= graph.n() {
                return Err(Error::domain(format!("target {target} out of range")));
            }
            Ok(graph
                .bfs_distances(target)
                .into_iter()
                .map(|d| d.map_or(T::zero(), |d| T::one() / T::from_count(d + 1)))
                .collect())
        }
    }
}

/// Stickiness drawn i.i.d. uniform on `[lo, hi)`.
pub fn random_alpha<T: Scalar>(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<T>> {
    if !(0.0 <= lo && lo <= hi && hi <= ALPHA_MAX) {
        return Err(Error::domain(format!(
            "alpha range [{lo}, {hi}] must lie within [0, {ALPHA_MAX}]"
        )));
    }
    let mut rng = seeded(seed);
    Ok((0..n)
        .map(|_| T::lit(lo + (hi - lo) * rng.random::<f64>()))
        .collect())
}

/// How each policy is evaluated inside policy iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluator {
    Bellman(BellmanSolver),
    /// One PageRank solve on the (reversible) chain with the closed-form stationary law.
    PageRank(Schedule),
}

impl Evaluator {
    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Bellman(s) => s.name(),
            Evaluator::PageRank(s) => s.name(),
        }
    }
}

/// Evaluates the model's current policy.
pub fn evaluate_model<T: Scalar>(
    model: &StickyWalkModel<T>,
    evaluator: Evaluator,
    tol: T,
) -> Result<(Vec<T>, SolveStats)> {
    let (chain, reward) = model.build_chain()?;
    let problem = EvalProblem::new(&chain, model.gamma, reward)?;
    match evaluator {
        Evaluator::Bellman(solver) => {
            let (v, stats) = bellman_direct(&problem, solver, tol)?;
            Ok((v.v, stats))
        }
        Evaluator::PageRank(schedule) => {
            let mu = model.closed_form_stationary();
            let ev = value_via_pagerank_irreducible_with_stationary(&problem, &mu, schedule, tol)?;
            Ok((ev.value.v, ev.stats))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyRound<T> {
    pub round: usize,
    pub alpha: Vec<T>,
    pub value: Vec<T>,
    pub average_value: T,
    pub stats: SolveStats,
}

#[derive(Debug)]
pub enum PolicyOutcome {
    /// The improvement step moved no stickiness by [`POLICY_CHANGE_TOL`] or more.
    Converged,
    RoundCap,
    /// An evaluation failed; the rounds before it are kept.
    Failed(Error),
}

#[derive(Debug)]
pub struct PolicyTrajectory<T> {
    pub rounds: Vec<PolicyRound<T>>,
    pub outcome: PolicyOutcome,
    /// Policy produced by the last improvement step.
    pub final_alpha: Vec<T>,
}

/// Alternates evaluation and [`StickyWalkModel::improve_policy`], starting from the
/// model's stickiness, for at most `max_rounds` evaluations.
pub fn policy_iteration<T: Scalar>(
    model: &StickyWalkModel<T>,
    evaluator: Evaluator,
    tol: T,
    max_rounds: usize,
) -> PolicyTrajectory<T> {
    let mut current = model.clone();
    let mut rounds = Vec::new();
    for round in 0..max_rounds {
        let (value, stats) = match evaluate_model(&current, evaluator, tol) {
            Ok(r) => r,
            Err(e) => {
                return PolicyTrajectory {
                    rounds,
                    outcome: PolicyOutcome::Failed(e),
                    final_alpha: current.alpha,
                }
            }
        };
        let average_value = value.iter().copied().sum::<T>() / T::from_count(value.len().max(1));
        let next = current.improve_policy(&value);
        let change = next
            .iter()
            .zip(&current.alpha)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        rounds.push(PolicyRound {
            round,
            alpha: current.alpha.clone(),
            value,
            average_value,
            stats,
        });
        current.alpha = next;
        if change < T::lit(POLICY_CHANGE_TOL) {
            return PolicyTrajectory {
                rounds,
                outcome: PolicyOutcome::Converged,
                final_alpha: current.alpha,
            };
        }
    }
    PolicyTrajectory {
        rounds,
        outcome: PolicyOutcome::RoundCap,
        final_alpha: current.alpha,
    }
}
