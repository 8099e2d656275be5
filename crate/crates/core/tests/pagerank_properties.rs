mod common;

use common::{dense_row_solve, inf_dist};
use mdp_pagerank::pagerank::PushWorkspace;
use mdp_pagerank::random_chains::{random_irreducible, random_rewards};
use mdp_pagerank::{
    solve_pagerank, stationary_distribution, time_reversal, Distribution, PageRankProblem,
    Schedule, SparseChain,
};
use proptest::prelude::*;

fn restart(n: usize, seed: u64) -> Distribution<f64> {
    Distribution::normalized(random_rewards(n, 0.0, 1.0, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn push_invariant_holds_after_any_push_sequence(n in 2usize..20, seed in any::<u64>(), c in 0.0f64..0.99, pushes in prop::collection::vec(0usize..20, 0..200)) {
        let m: SparseChain<f64> = random_irreducible(n, 0.3, seed).unwrap();
        let b: Vec<f64> = random_rewards(n, -1.0, 1.0, seed ^ 1);
        let exact = dense_row_solve(&m, c, &b);
        let mut ws = PushWorkspace::new(&m, c, b);
        for s in pushes {
            ws.push(s % n);
            let tail = dense_row_solve(&m, c, ws.residual());
            let recon: Vec<f64> = ws.approximation().iter().zip(&tail).map(|(p, t)| p + t).collect();
            prop_assert!(inf_dist(&recon, &exact) <= 1e-10);
        }
        let (_, edges) = ws.push_all_synchronous();
        prop_assert!(edges <= m.nnz());
        let tail = dense_row_solve(&m, c, ws.residual());
        let recon: Vec<f64> = ws.approximation().iter().zip(&tail).map(|(p, t)| p + t).collect();
        prop_assert!(inf_dist(&recon, &exact) <= 1e-10);
    }

    #[test]
    fn all_schedules_agree(n in 2usize..500, seed in any::<u64>(), c in 0.05f64..0.95) {
        let m: SparseChain<f64> = random_irreducible(n, 4.0 / n as f64, seed).unwrap();
        let prob = PageRankProblem::new(&m, c, restart(n, seed ^ 2)).unwrap();
        let tol = 1e-11;
        let sols: Vec<_> = Schedule::all().into_iter().map(|s| solve_pagerank(&prob, s, tol).unwrap()).collect();
        for a in &sols {
            prop_assert!(a.stats.final_residual <= tol);
            // Σ(w − cwM − (1 − c)u) = (1 − c)(Σw − 1) for stochastic M
            prop_assert!((a.w.iter().sum::<f64>() - 1.0).abs() <= tol / (1.0 - c) + 1e-14);
            for b in &sols {
                prop_assert!(inf_dist(&a.w, &b.w) <= 10.0 * tol);
            }
        }
    }

    #[test]
    fn reversal_is_an_involution(n in 1usize..60, seed in any::<u64>()) {
        let p: SparseChain<f64> = random_irreducible(n, 0.2, seed).unwrap();
        let mu = stationary_distribution(&p, 1e-14).unwrap();
        let pp = time_reversal(&time_reversal(&p, &mu).unwrap(), &mu).unwrap();
        prop_assert_eq!(pp.nnz(), p.nnz());
        for s in 0..n {
            for (t, x) in p.row_iter(s) {
                prop_assert!((pp.get(s, t) - x).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn neumann_truncation_error_bound(n in 2usize..40, seed in any::<u64>(), c in 0.1f64..0.95, steps in 0usize..30) {
        let m: SparseChain<f64> = random_irreducible(n, 0.2, seed).unwrap();
        let u = restart(n, seed ^ 3);
        let exact = solve_pagerank(&PageRankProblem::new(&m, c, u.clone()).unwrap(), Schedule::GaussSeidelCyclic, 1e-14).unwrap().w;
        // (1 − c) u Σ_{t <= steps} cᵗ Mᵗ
        let mut term: Vec<f64> = u.iter().map(|x| (1.0 - c) * x).collect();
        let mut acc = term.clone();
        for _ in 0..steps {
            term = m.left_mul(&term).into_iter().map(|x| c * x).collect();
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
        }
        let err: f64 = acc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(err <= c.powi(steps as i32 + 1) + 1e-12);
    }

    #[test]
    fn max_residual_pushes_never_increase_residual(n in 2usize..40, seed in any::<u64>(), c in 0.1f64..0.99) {
        let m: SparseChain<f64> = random_irreducible(n, 0.3, seed).unwrap();
        let u = restart(n, seed ^ 4);
        let mut ws = PushWorkspace::new(&m, c, u.iter().map(|x| (1.0 - c) * x).collect());
        let mut last = ws.residual().iter().sum::<f64>();
        for _ in 0..20 * n {
            let s = (0..n).fold(0, |b, s| if ws.residual()[s] > ws.residual()[b] { s } else { b });
            ws.push(s);
            let now = ws.residual().iter().map(|x| x.abs()).sum::<f64>();
            prop_assert!(now <= last + 1e-15);
            last = now;
        }
    }
}

#[test]
fn teleport_only_returns_restart() {
    let m: SparseChain<f64> = random_irreducible(10, 0.3, 5).unwrap();
    let u = restart(10, 6);
    for sch in Schedule::all() {
        let sol = solve_pagerank(
            &PageRankProblem::new(&m, 0.0, u.clone()).unwrap(),
            sch,
            1e-14,
        )
        .unwrap();
        assert!(inf_dist(&sol.w, &u) <= 1e-15);
    }
}

#[test]
fn stationary_restart_is_a_fixed_point() {
    let m: SparseChain<f64> = random_irreducible(30, 0.2, 8).unwrap();
    let mu = stationary_distribution(&m, 1e-15).unwrap();
    let sol = solve_pagerank(
        &PageRankProblem::new(&m, 0.7, mu.clone()).unwrap(),
        Schedule::rlgl_gsd(),
        1e-13,
    )
    .unwrap();
    assert!(inf_dist(&sol.w, &mu) <= 1e-12);
}

#[test]
fn schedules_are_deterministic() {
    let m: SparseChain<f64> = random_irreducible(200, 0.03, 9).unwrap();
    let prob = PageRankProblem::new(&m, 0.85, restart(200, 10)).unwrap();
    for sch in Schedule::all() {
        let a = solve_pagerank(&prob, sch, 1e-10).unwrap();
        let b = solve_pagerank(&prob, sch, 1e-10).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.stats.residual_trace, b.stats.residual_trace);
    }
}

#[test]
fn residual_trace_is_monotone_in_cost() {
    let m: SparseChain<f64> = random_irreducible(300, 0.02, 11).unwrap();
    let prob = PageRankProblem::new(&m, 0.9, restart(300, 12)).unwrap();
    for sch in Schedule::all() {
        let s = solve_pagerank(&prob, sch, 1e-10).unwrap().stats;
        assert!(s.residual_trace.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(s.residual_trace.iter().all(|p| p.1 >= 0.0));
        assert_eq!(
            s.normalized_iterations,
            s.edges_processed as f64 / s.total_edges as f64
        );
    }
}
