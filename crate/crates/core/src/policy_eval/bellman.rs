use super::{EvalProblem, ValueFunction};
use crate::error::{Error, PartialSolve, Result};
use crate::pagerank::{CostMeter, SolveStats};
use crate::priority::StateQueue;
use crate::scalar::Scalar;

/// Classical iterative solvers for the Bellman system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellmanSolver {
    /// In-place sweeps over the states in index order.
    GaussSeidel,
    /// Always update the state with the largest absolute Bellman residual.
    PrioritizedSweeping,
    /// Synchronous sweeps.
    Jacobi,
}

impl BellmanSolver {
    pub fn name(&self) -> &'static str {
        match self {
            BellmanSolver::GaussSeidel => "gauss-seidel",
            BellmanSolver::PrioritizedSweeping => "prioritized-sweeping",
            BellmanSolver::Jacobi => "jacobi",
        }
    }
}

/// Solves `(I − γP)v = r` from `v = 0` until `‖(I − γP)v − r‖₁ <= tol`.
///
/// Each coordinate update solves its own equation exactly, self-loop included:
/// `v(s) = (r(s) + γ Σ_{t≠s} P(s,t) v(t)) / (1 − γ P(s,s))`. Absorbing states of an
/// undiscounted problem keep `v = 0`.
pub fn bellman_direct<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    solver: BellmanSolver,
    tol: T,
) -> Result<(ValueFunction<T>, SolveStats)> {
    if !(tol > T::zero()) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let n = problem.n();
    let cap = 10_000 * n.max(1) as u64;
    let mut v = vec![T::zero(); n];
    let initial = crate::scalar::norm_l1(&problem.reward);
    let mut meter = CostMeter::new(problem.chain.nnz(), initial.as_f64());
    let outcome = match solver {
        BellmanSolver::GaussSeidel => sweeps(problem, &mut v, &mut meter, tol, cap, true),
        BellmanSolver::Jacobi => sweeps(problem, &mut v, &mut meter, tol, cap, false),
        BellmanSolver::PrioritizedSweeping => prioritized(problem, &mut v, &mut meter, tol, cap),
    };
    let value = ValueFunction::assess(problem, v);
    let stats = meter.finish(value.bellman_residual_l1.as_f64());
    match outcome {
        Ok(()) => Ok((value, stats)),
        Err(()) => Err(Error::Convergence {
            routine: solver.name(),
            iterations: stats.coordinate_updates,
            residual: value.bellman_residual_l1.as_f64(),
            partial: Some(Box::new(PartialSolve {
                iterate: value.v.iter().map(|x| x.as_f64()).collect(),
                stats,
            })),
        }),
    }
}

/// Exact solution of state `s`'s equation given the other coordinates, or `None` for an
/// absorbing state of an undiscounted problem.
#[inline]
fn coordinate_solve<T: Scalar>(problem: &EvalProblem<'_, T>, v: &[T], s: usize) -> Option<T> {
    let (targets, probs) = problem.chain.row(s);
    let mut acc = problem.reward[s];
    let mut diag = T::zero();
    for (&t, &p) in targets.iter().zip(probs) {
        if t == s {
            diag = p;
        } else {
            acc += problem.gamma * p * v[t];
        }
    }
    let denom = T::one() - problem.gamma * diag;
    (denom > T::zero()).then(|| acc / denom)
}

fn sweeps<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    v: &mut Vec<T>,
    meter: &mut CostMeter,
    tol: T,
    cap: u64,
    in_place: bool,
) -> Result<(), ()> {
    let n = problem.n();
    loop {
        let residual = problem.bellman_residual(v);
        if residual <= tol {
            return Ok(());
        }
        if meter.updates() >= cap {
            return Err(());
        }
        let mut edges = 0;
        if in_place {
            for s in 0..n {
                if let Some(x) = coordinate_solve(problem, v, s) {
                    v[s] = x;
                }
                edges += problem.chain.out_degree(s);
            }
        } else {
            let next: Vec<T> = (0..n)
                .map(|s| coordinate_solve(problem, v, s).unwrap_or(v[s]))
                .collect();
            edges = problem.chain.nnz();
            *v = next;
        }
        meter.bulk_updates(n as u64);
        let residual = problem.bellman_residual(v);
        meter.add_edges(edges, residual.as_f64());
    }
}

/// Maintains `e = r + γPv − v`; updating `s` by `Δ` changes `e(t)` by `γP(t,s)Δ` for each
/// predecessor `t`, so the work of one update is the in-degree of `s`.
fn prioritized<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    v: &mut [T],
    meter: &mut CostMeter,
    tol: T,
    cap: u64,
) -> Result<(), ()> {
    let n = problem.n();
    let chain = problem.chain;
    let gamma = problem.gamma;
    let mut queue = StateQueue::new(n);
    let diag: Vec<T> = (0..n).map(|s| chain.get(s, s)).collect();
    let active = |s: usize| T::one() - gamma * diag[s] > T::zero();
    loop {
        let mut e: Vec<T> = problem
            .bellman_residual_vec(v)
            .into_iter()
            .map(|x| -x)
            .collect();
        let mut tracked: T = e.iter().map(|x| x.abs()).sum();
        if tracked <= tol {
            return Ok(());
        }
        queue.clear();
        for s in (0..n).filter(|&s| active(s)) {
            queue.set(s, e[s].abs().as_f64());
        }
        let mut since_refresh = 0usize;
        while tracked > tol {
            if meter.updates() >= cap {
                return Err(());
            }
            let Some(s) = queue.pop() else { break };
            let delta = e[s] / (T::one() - gamma * diag[s]);
            v[s] += delta;
            let (sources, probs) = chain.col(s);
            tracked -= e[s].abs();
            e[s] -= delta;
            tracked += e[s].abs();
            for (&t, &p) in sources.iter().zip(probs) {
                let old = e[t];
                e[t] += gamma * p * delta;
                tracked += e[t].abs() - old.abs();
                if active(t) {
                    queue.set(t, e[t].abs().as_f64());
                }
            }
            meter.update(sources.len(), tracked.as_f64());
            since_refresh += 1;
            if since_refresh >= n {
                tracked = e.iter().map(|x| x.abs()).sum();
                since_refresh = 0;
            }
        }
        // loop again: recompute the residual from scratch before declaring convergence
    }
}
