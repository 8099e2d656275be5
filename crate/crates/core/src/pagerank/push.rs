use crate::chain::SparseChain;
use crate::scalar::Scalar;

/// State of a residual-push solve of `x (I − cM) = b`.
///
/// Holds an approximation `p` and a residual `r` with `x = p + r (I − cM)⁻¹` at all
/// times. Residuals may be negative. The weighted residual norm `Σ ω(s)|r(s)|` is
/// maintained incrementally.
///
/// A single-state push at `s` also absorbs the self-loop: it moves `r(s)/(1 − cM(s,s))` into `p(s)`,
/// the sum of the geometric series of returns to `s`, and leaves `r(s) = 0`.
#[derive(Debug, Clone)]
pub struct PushWorkspace<'a, T> {
    matrix: &'a SparseChain<T>,
    c: T,
    rhs: Vec<T>,
    p: Vec<T>,
    r: Vec<T>,
    weights: Option<Vec<T>>,
    /// `1/(1 − cM(s,s))`.
    loop_gain: Vec<T>,
    tracked: T,
}

impl<'a, T: Scalar> PushWorkspace<'a, T> {
    pub fn new(matrix: &'a SparseChain<T>, c: T, rhs: Vec<T>) -> Self {
        Self::with_weights(matrix, c, rhs, None)
    }

    pub fn with_weights(
        matrix: &'a SparseChain<T>,
        c: T,
        rhs: Vec<T>,
        weights: Option<Vec<T>>,
    ) -> Self {
        let n = matrix.n();
        let loop_gain = (0..n)
            .map(|s| {
                let stay = c * matrix.get(s, s);
                if stay < T::one() {
                    T::one() / (T::one() - stay)
                } else {
                    T::one()
                }
            })
            .collect();
        let mut ws = PushWorkspace {
            matrix,
            c,
            r: rhs.clone(),
            rhs,
            p: vec![T::zero(); n],
            weights,
            loop_gain,
            tracked: T::zero(),
        };
        ws.tracked = ws.weighted_norm();
        ws
    }

    #[inline]
    fn weight(&self, s: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[s])
    }

    /// Moves the residual at `s`, amplified by the self-loop, into the approximation and
    /// spreads it along `c·M(s, ·)` onto the other successors. Returns the number of
    /// transitions touched.
    #[inline]
    pub fn push(&mut self, s: usize) -> usize {
        let rho = self.r[s];
        if rho == T::zero() {
            return 0;
        }
        let mass = rho * self.loop_gain[s];
        self.p[s] += mass;
        self.r[s] = T::zero();
        self.tracked -= self.weight(s) * rho.abs();
        let (targets, probs) = self.matrix.row(s);
        let spread = self.c * mass;
        for (&t, &m) in targets.iter().zip(probs) {
            if t == s {
                continue;
            }
            let old = self.r[t];
            let new = old + spread * m;
            self.r[t] = new;
            self.tracked += self.weight(t) * (new.abs() - old.abs());
        }
        targets.len()
    }

    /// One synchronous sweep: every state pushes its current residual at once, self-loops
    /// included as ordinary transitions, so `p` after `k` sweeps is the Neumann series
    /// truncated at `k` terms.
    /// Returns `(pushed states, transitions touched)`.
    pub fn push_all_synchronous(&mut self) -> (u64, usize) {
        let n = self.matrix.n();
        let mut next = vec![T::zero(); n];
        let (mut pushed, mut edges) = (0u64, 0usize);
        for s in 0..n {
            let rho = self.r[s];
            if rho == T::zero() {
                continue;
            }
            self.p[s] += rho;
            let spread = self.c * rho;
            let (targets, probs) = self.matrix.row(s);
            for (&t, &m) in targets.iter().zip(probs) {
                next[t] += spread * m;
            }
            pushed += 1;
            edges += targets.len();
        }
        self.r = next;
        self.tracked = self.weighted_norm();
        (pushed, edges)
    }

    /// Recomputes `r = b − p(I − cM)` from scratch, discarding accumulated rounding.
    pub fn resync(&mut self) {
        let pm = self.matrix.left_mul(&self.p);
        for s in 0..self.r.len() {
            self.r[s] = self.rhs[s] - self.p[s] + self.c * pm[s];
        }
        self.tracked = self.weighted_norm();
    }

    /// Recomputes the weighted norm from the stored residual.
    pub fn refresh_norm(&mut self) -> T {
        self.tracked = self.weighted_norm();
        self.tracked
    }

    fn weighted_norm(&self) -> T {
        match &self.weights {
            None => self.r.iter().map(|x| x.abs()).sum(),
            Some(w) => self.r.iter().zip(w).map(|(x, &w)| w * x.abs()).sum(),
        }
    }

    pub fn residual_norm(&self) -> T {
        self.tracked
    }

    pub fn approximation(&self) -> &[T] {
        &self.p
    }

    pub fn residual(&self) -> &[T] {
        &self.r
    }

    pub fn matrix(&self) -> &SparseChain<T> {
        self.matrix
    }

    pub fn into_approximation(self) -> Vec<T> {
        self.p
    }
}
