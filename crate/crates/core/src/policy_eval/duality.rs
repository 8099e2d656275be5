//! Numeric check that the forward and backward resolvents are adjoint in `L²(μ)` and that
//! the measure map `φ: f ↦ μ⊙f` intertwines them.

use rand::Rng;

use super::{bellman_direct, BellmanSolver, EvalProblem};
use crate::chain::SparseChain;
use crate::error::{Error, Result};
use crate::markov::time_reversal;
use crate::pagerank::{solve_linear_row, Schedule, SolveOptions};
use crate::rng::seeded;
use crate::scalar::{dot, Scalar};

/// Largest deviations seen over the trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointnessReport {
    /// `max |⟨R f, g⟩_μ − ⟨f, R* g⟩_μ|`.
    pub pairing: f64,
    /// `max ‖φ(R f) − (φf)(I − γP*)⁻¹‖₁`, the right side from the row (PageRank) solver.
    pub conjugacy: f64,
    pub trials: usize,
}

impl AdjointnessReport {
    pub fn max_deviation(&self) -> f64 {
        self.pairing.max(self.conjugacy)
    }
}

const SOLVE_TOL: f64 = 1e-13;

/// Draws `trials` pairs `(f, g)` uniform on `[-1, 1]ⁿ` and compares both identities, with
/// every resolvent computed by the crate's own solvers.
pub fn check_resolvent_adjointness<T: Scalar>(
    p: &SparseChain<T>,
    mu: &[T],
    gamma: T,
    trials: usize,
    seed: u64,
) -> Result<AdjointnessReport> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::domain("discount must lie in [0, 1)"));
    }
    let n = p.n();
    let reversed = time_reversal(p, mu)?;
    let tol = T::lit(SOLVE_TOL).max(T::epsilon() * T::lit(64.0));
    let mut rng = seeded(seed);
    let mut report = AdjointnessReport {
        pairing: 0.0,
        conjugacy: 0.0,
        trials,
    };
    let resolvent = |m: &SparseChain<T>, f: Vec<T>| -> Result<Vec<T>> {
        let problem = EvalProblem::unchecked(m, gamma, f);
        Ok(bellman_direct(&problem, BellmanSolver::GaussSeidel, tol)?
            .0
            .v)
    };
    for _ in 0..trials {
        let f: Vec<T> = (0..n)
            .map(|_| T::lit(2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let g: Vec<T> = (0..n)
            .map(|_| T::lit(2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let rf = resolvent(p, f.clone())?;
        let rg = resolvent(&reversed, g.clone())?;
        let lhs = weighted_pairing(&rf, &g, mu);
        let rhs = weighted_pairing(&f, &rg, mu);
        report.pairing = report.pairing.max((lhs - rhs).abs().as_f64());

        let measure: Vec<T> = f.iter().zip(mu).map(|(&fi, &m)| fi * m).collect();
        let (row, _) = solve_linear_row(
            &reversed,
            gamma,
            measure,
            Schedule::GaussSeidelCyclic,
            &SolveOptions::new(tol),
        )?;
        let dev: f64 = rf
            .iter()
            .zip(mu)
            .zip(&row)
            .map(|((&r, &m), &x)| (m * r - x).abs().as_f64())
            .sum();
        report.conjugacy = report.conjugacy.max(dev);
    }
    Ok(report)
}

fn weighted_pairing<T: Scalar>(a: &[T], b: &[T], mu: &[T]) -> T {
    let ab: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    dot(&ab, mu)
}
