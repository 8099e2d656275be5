//! Stationary and quasi-stationary laws, time reversal and Doob transforms.

use crate::chain::{Distribution, SparseChain};
use crate::classes::scc_decompose;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm_inf, norm_l1, Scalar};

/// Stopping rule shared by the spectral power iterations.
#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions<T> {
    pub tol: T,
    pub max_sweeps: u64,
}

impl<T: Scalar> Default for SpectralOptions<T> {
    fn default() -> Self {
        SpectralOptions {
            tol: T::lit(1e-12),
            max_sweeps: 1_000_000,
        }
    }
}

impl<T: Scalar> SpectralOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        SpectralOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Residual history watcher: flags an iteration whose residual has not dropped over the
/// last `WINDOW` sweeps, the signature of a periodic chain.
struct OscillationDetector<T> {
    history: std::collections::VecDeque<T>,
}

impl<T: Scalar> OscillationDetector<T> {
    const WINDOW: usize = 10;

    fn new() -> Self {
        OscillationDetector {
            history: Default::default(),
        }
    }

    fn observe(&mut self, residual: T) -> bool {
        self.history.push_back(residual);
        if self.history.len() <= Self::WINDOW {
            return false;
        }
        let old = self.history.pop_front().unwrap();
        residual >= old
    }

    fn reset(&mut self) {
        self.history.clear();
    }
}

/// Stationary distribution `μ = μP` of a stochastic irreducible chain.
pub fn stationary_distribution<T: Scalar>(p: &SparseChain<T>, tol: T) -> Result<Distribution<T>> {
    stationary_distribution_with(p, &SpectralOptions::with_tol(tol))
}

/// Power iteration from the uniform law. When the residual stalls (periodic chains) the
/// iteration switches to the lazy chain `(P + I)/2`, which has the same stationary law.
pub fn stationary_distribution_with<T: Scalar>(
    p: &SparseChain<T>,
    opts: &SpectralOptions<T>,
) -> Result<Distribution<T>> {
    if !p.is_stochastic() {
        return Err(Error::domain(
            "stationary distribution requires a stochastic chain",
        ));
    }
    let n = p.n();
    if n == 0 {
        return Err(Error::domain("empty chain"));
    }
    if !scc_decompose(p).is_irreducible() {
        return Err(Error::domain(
            "stationary distribution requires an irreducible chain",
        ));
    }
    let half = T::lit(0.5);
    let mut x = vec![T::one() / T::from_count(n); n];
    let mut lazy = false;
    let mut watch = OscillationDetector::new();
    let mut residual = T::infinity();
    for sweep in 0..opts.max_sweeps {
        let y = p.left_mul(&x);
        residual = x.iter().zip(&y).map(|(&a, &b)| (a - b).abs()).sum();
        if residual <= opts.tol {
            if x.iter().any(|&v| v <= T::zero()) {
                return Err(Error::domain(
                    "stationary distribution has zero entries; chain is not irreducible",
                ));
            }
            log::trace!("stationary distribution converged after {sweep} sweeps");
            return Ok(Distribution::from_vec_unchecked(x));
        }
        if !lazy && watch.observe(residual) {
            lazy = true;
        }
        if lazy {
            for (a, b) in x.iter_mut().zip(&y) {
                *a = half * (*a + *b);
            }
        } else {
            x = y;
        }
        let total: T = x.iter().copied().sum();
        x.iter_mut().for_each(|v| *v /= total);
    }
    Err(Error::Convergence {
        routine: "stationary_distribution",
        iterations: opts.max_sweeps,
        residual: residual.as_f64(),
        partial: None,
    })
}

/// Time reversal `P*(s, t) = μ(t) P(t, s) / μ(s)`.
///
/// Row sums of the result are exact only to the accuracy of `mu` as a stationary law.
pub fn time_reversal<T: Scalar>(p: &SparseChain<T>, mu: &[T]) -> Result<SparseChain<T>> {
    if !p.is_stochastic() {
        return Err(Error::domain("time reversal requires a stochastic chain"));
    }
    check_positive(mu, p.n(), "stationary distribution")?;
    Ok(reverse_with_weights(p, mu, T::one()))
}

/// `(1/scale) D⁻¹ Mᵀ D` with `D = diag(weights)`; rows come from the in-edges of `M`.
fn reverse_with_weights<T: Scalar>(m: &SparseChain<T>, weights: &[T], scale: T) -> SparseChain<T> {
    let rows = (0..m.n())
        .map(|s| {
            let (src, probs) = m.col(s);
            let denom = scale * weights[s];
            src.iter()
                .zip(probs)
                .map(|(&t, &q)| (t, weights[t] * q / denom))
                .collect()
        })
        .collect();
    SparseChain::from_rows_derived(rows)
}

fn check_positive<T: Scalar>(v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::domain(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )));
    }
    if let Some(i) = v.iter().position(|&x| !(x > T::zero())) {
        return Err(Error::domain(format!(
            "{what} is not strictly positive at state {i}"
        )));
    }
    Ok(())
}

/// Largest `|μ(x) P(x, y) − μ(y) P(y, x)|` over stored transitions.
pub fn detailed_balance_violation<T: Scalar>(p: &SparseChain<T>, mu: &[T]) -> T {
    let mut worst = T::zero();
    for x in 0..p.n() {
        for (y, pxy) in p.row_iter(x) {
            worst = worst.max((mu[x] * pxy - mu[y] * p.get(y, x)).abs());
        }
    }
    worst
}

/// Perron data of an irreducible strictly substochastic matrix: `νQ = λν`, `Qh = λh`,
/// with `Σν = 1` and `νh = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTriple<T> {
    pub lambda: T,
    pub nu: Distribution<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> SpectralTriple<T> {
    /// `(‖νQ − λν‖₁, ‖Qh − λh‖∞)`.
    pub fn residuals(&self, q: &SparseChain<T>) -> (T, T) {
        let nq = q.left_mul(&self.nu);
        let qh = q.right_mul(&self.h);
        let left = nq
            .iter()
            .zip(self.nu.iter())
            .map(|(&a, &b)| (a - self.lambda * b).abs())
            .sum();
        let right = qh
            .iter()
            .zip(&self.h)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - self.lambda * b).abs()));
        (left, right)
    }

    /// `ν̃ = ν ⊙ h`, the stationary law of both Doob chains.
    pub fn doob_stationary(&self) -> Distribution<T> {
        Distribution::from_vec_unchecked(
            self.nu.iter().zip(&self.h).map(|(&a, &b)| a * b).collect(),
        )
    }
}

/// Quasi-stationary triple of an irreducible substochastic `Q` with some row sum below one.
pub fn quasi_stationary<T: Scalar>(q: &SparseChain<T>, tol: T) -> Result<SpectralTriple<T>> {
    quasi_stationary_with(q, &SpectralOptions::with_tol(tol))
}

/// Simultaneous normalized power iterations for `h` (on `Q`) and `ν` (on `Qᵀ`), with
/// `λ = Σ(νQ)` re-estimated each sweep. On stalling residuals both iterations move to
/// `(Q + λ̂I)/(1 + λ̂)`, which shares the Perron vectors.
pub fn quasi_stationary_with<T: Scalar>(
    q: &SparseChain<T>,
    opts: &SpectralOptions<T>,
) -> Result<SpectralTriple<T>> {
    let n = q.n();
    if n == 0 {
        return Err(Error::domain("empty block"));
    }
    if q.is_stochastic() {
        return Err(Error::domain(
            "quasi-stationary distribution requires a strictly substochastic block (λ = 1)",
        ));
    }
    if !scc_decompose(q).is_irreducible() {
        return Err(Error::domain(
            "quasi-stationary distribution requires an irreducible block",
        ));
    }
    let mut nu = vec![T::one() / T::from_count(n); n];
    let mut h = vec![T::one(); n];
    let mut shift: Option<T> = None;
    let mut watch = OscillationDetector::new();
    let mut worst = T::infinity();
    for sweep in 0..opts.max_sweeps {
        let nq = q.left_mul(&nu);
        let qh = q.right_mul(&h);
        let lambda: T = nq.iter().copied().sum();
        if !(lambda > T::zero()) {
            return Err(Error::domain(
                "block has spectral radius zero; it is not irreducible",
            ));
        }
        let left: T = nq
            .iter()
            .zip(&nu)
            .map(|(&a, &b)| (a - lambda * b).abs())
            .sum();
        // h is kept at unit max norm, so this residual is scale-free.
        let h_lambda = dot(&nu, &qh) / dot(&nu, &h);
        let right = qh
            .iter()
            .zip(&h)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - h_lambda * b).abs()));
        worst = left.max(right);
        if worst <= opts.tol {
            log::trace!("quasi-stationary iteration converged after {sweep} sweeps");
            return finish_triple(q, lambda, nu, h, opts.tol);
        }
        if shift.is_none() && watch.observe(worst) {
            shift = Some(lambda);
            watch.reset();
        }
        let (next_nu, next_h) = match shift {
            None => (nq, qh),
            Some(s) => {
                let blend = |a: &[T], b: &[T]| {
                    a.iter()
                        .zip(b)
                        .map(|(&x, &y)| x + s * y)
                        .collect::<Vec<_>>()
                };
                (blend(&nq, &nu), blend(&qh, &h))
            }
        };
        let total: T = next_nu.iter().copied().sum();
        nu = next_nu.into_iter().map(|v| v / total).collect();
        let top = norm_inf(&next_h);
        h = next_h.into_iter().map(|v| v / top).collect();
    }
    Err(Error::Convergence {
        routine: "quasi_stationary",
        iterations: opts.max_sweeps,
        residual: worst.as_f64(),
        partial: None,
    })
}

fn finish_triple<T: Scalar>(
    q: &SparseChain<T>,
    lambda: T,
    nu: Vec<T>,
    h: Vec<T>,
    tol: T,
) -> Result<SpectralTriple<T>> {
    if nu.iter().chain(&h).any(|&x| !(x > T::zero())) {
        return Err(Error::domain(
            "Perron vectors have zero entries; block is not irreducible",
        ));
    }
    if !(lambda < T::one()) {
        return Err(Error::domain(format!(
            "spectral radius {lambda} is not below one"
        )));
    }
    let total = norm_l1(&nu);
    let nu: Vec<T> = nu.into_iter().map(|v| v / total).collect();
    let scale = dot(&nu, &h);
    let h = h.into_iter().map(|v| v / scale).collect();
    let triple = SpectralTriple {
        lambda,
        nu: Distribution::from_vec_unchecked(nu),
        h,
    };
    debug_assert!({
        let (l, r) = triple.residuals(q);
        // rescaling h by 1/νh can inflate the sup-norm residual by that factor
        l <= tol * T::lit(10.0) && r <= tol * T::lit(10.0) * (T::one() + norm_inf(&triple.h))
    });
    Ok(triple)
}

/// Doob transform `Q̃(s, t) = Q(s, t) h(t) / (λ h(s))`: stochastic, with stationary law
/// `ν ⊙ h`.
pub fn doob_transform<T: Scalar>(q: &SparseChain<T>, triple: &SpectralTriple<T>) -> SparseChain<T> {
    let rows = (0..q.n())
        .map(|s| {
            let denom = triple.lambda * triple.h[s];
            q.row_iter(s)
                .map(|(t, p)| (t, p * triple.h[t] / denom))
                .collect()
        })
        .collect();
    SparseChain::from_rows_derived(rows)
}

/// Time reversal of the Doob transform, `Q̃*(s, t) = ν(t) Q(t, s) / (λ ν(s))`. Independent
/// of `h`.
pub fn reversed_doob<T: Scalar>(q: &SparseChain<T>, triple: &SpectralTriple<T>) -> SparseChain<T> {
    reverse_with_weights(q, &triple.nu, triple.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dense(rows: &[&[f64]]) -> SparseChain<f64> {
        SparseChain::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn cycle3() -> SparseChain<f64> {
        SparseChain::from_triplets(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn two_state_stationary() {
        // μP = μ by hand: μ0 = 0.5μ0 + 0.25μ1 ⇒ μ1 = 2μ0.
        let p = dense(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let mu = stationary_distribution(&p, 1e-12).unwrap();
        assert_abs_diff_eq!(mu[0], 1.0 / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(mu[1], 2.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn periodic_chains_converge() {
        let mu = stationary_distribution(&cycle3(), 1e-12).unwrap();
        for &m in mu.iter() {
            assert_abs_diff_eq!(m, 1.0 / 3.0, epsilon = 1e-12);
        }
        // period two with a non-uniform law: plain power iteration would oscillate forever
        let p = dense(&[&[0.0, 0.5, 0.5], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let mu = stationary_distribution(&p, 1e-12).unwrap();
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(mu[1], 0.25, epsilon = 1e-11);
    }

    #[test]
    fn stationary_rejects_substochastic_and_reports_cap() {
        let q = dense(&[&[0.0, 0.5], &[0.5, 0.0]]);
        assert!(matches!(
            stationary_distribution(&q, 1e-12),
            Err(Error::Domain(_))
        ));
        let p = dense(&[&[0.999, 0.001], &[0.001, 0.999]]);
        let opts = SpectralOptions {
            tol: 1e-15,
            max_sweeps: 1,
        };
        // uniform start is already stationary here; use an asymmetric chain instead
        let p2 = dense(&[&[0.9, 0.1], &[0.3, 0.7]]);
        assert!(stationary_distribution_with(&p, &opts).is_ok());
        match stationary_distribution_with(&p2, &opts) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let p = dense(&[&[0.5, 0.5], &[0.0, 1.0]]);
        assert!(matches!(
            stationary_distribution(&p, 1e-12),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reversal_examples() {
        let p = dense(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let rev = time_reversal(&p, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                assert_abs_diff_eq!(rev.get(s, t), p.get(s, t), epsilon = 1e-15);
            }
        }
        let rev = time_reversal(&cycle3(), &[1.0 / 3.0; 3]).unwrap();
        assert_eq!(
            rev,
            SparseChain::from_triplets(3, [(0, 2, 1.0), (2, 1, 1.0), (1, 0, 1.0)]).unwrap()
        );
        assert!(matches!(
            time_reversal(&p, &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quasi_stationary_examples() {
        let q = dense(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let t = quasi_stationary(&q, 1e-12).unwrap();
        assert_abs_diff_eq!(t.lambda, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.nu[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.h[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.h[1], 1.0, epsilon = 1e-12);

        let q = dense(&[&[0.5, 0.25], &[0.25, 0.5]]);
        let t = quasi_stationary(&q, 1e-12).unwrap();
        assert_abs_diff_eq!(t.lambda, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(t.nu[1], 0.5, epsilon = 1e-12);

        let p = dense(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let q = p.affine_with_identity(0.6, 0.0);
        let t = quasi_stationary(&q, 1e-13).unwrap();
        assert_abs_diff_eq!(t.lambda, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(t.nu[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.h[0], t.h[1], epsilon = 1e-12);
    }

    #[test]
    fn quasi_stationary_rejects_stochastic_block() {
        assert!(matches!(
            quasi_stationary(&cycle3(), 1e-12),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn doob_examples() {
        let q = dense(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let t = quasi_stationary(&q, 1e-13).unwrap();
        let flip = dense(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for m in [doob_transform(&q, &t), reversed_doob(&q, &t)] {
            for s in 0..2 {
                for u in 0..2 {
                    assert_abs_diff_eq!(m.get(s, u), flip.get(s, u), epsilon = 1e-12);
                }
            }
        }
        // Q = cP: Doob transform recovers P
        let p = dense(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let q = p.affine_with_identity(0.3, 0.0);
        let t = quasi_stationary(&q, 1e-13).unwrap();
        let back = doob_transform(&q, &t);
        for s in 0..2 {
            for u in 0..2 {
                assert_abs_diff_eq!(back.get(s, u), p.get(s, u), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn symmetric_block_reversed_doob_is_scaled_block() {
        let q = dense(&[&[0.2, 0.3, 0.0], &[0.3, 0.1, 0.4], &[0.0, 0.4, 0.2]]);
        let t = SpectralTriple {
            lambda: 0.7,
            nu: Distribution::uniform(3),
            h: vec![1.0; 3],
        };
        let r = reversed_doob(&q, &t);
        for s in 0..3 {
            for u in 0..3 {
                assert_abs_diff_eq!(r.get(s, u), q.get(s, u) / 0.7, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn detailed_balance_of_reversible_chain() {
        let p = dense(&[&[0.5, 0.5], &[0.25, 0.75]]);
        assert!(detailed_balance_violation(&p, &[1.0 / 3.0, 2.0 / 3.0]) < 1e-15);
        assert!(detailed_balance_violation(&cycle3(), &[1.0 / 3.0; 3]) > 0.3);
    }

    #[test]
    fn works_in_single_precision() {
        let p = SparseChain::<f32>::from_dense(&[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        let mu = stationary_distribution(&p, 1e-6).unwrap();
        assert!((mu[0] - 1.0 / 3.0).abs() < 1e-5);
    }
}
