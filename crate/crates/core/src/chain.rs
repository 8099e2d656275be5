//! Sparse nonnegative transition matrices and probability vectors.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::{Deref, Index};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row sums may exceed one by at most this much (or a few ulps in single precision).
pub const ROW_SUM_TOL: f64 = 1e-12;

pub(crate) fn row_sum_tol<T: Scalar>() -> T {
    T::lit(ROW_SUM_TOL).max(T::epsilon() * T::lit(8.0))
}

/// Row-compressed sparse matrix with entries in `(0, 1]` and row sums `<= 1`.
///
/// Stores transition matrices and their substochastic blocks. The transposed
/// adjacency (in-edges) is materialized next to the rows because reversal, residual push
/// and prioritized sweeping all walk predecessors.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChain<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    tvals: Vec<T>,
    row_sums: Vec<T>,
}

impl<T: Scalar> SparseChain<T> {
    /// Builds a chain from `(src, dst, prob)` triplets in any order.
    ///
    /// Rejects out-of-range indices, probabilities outside `(0, 1]`, duplicate entries and
    /// rows summing to more than `1 + ROW_SUM_TOL`.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (s, t, p) in triplets {
            if s >= n || t >= n {
                return Err(Error::domain(format!(
                    "transition ({s}, {t}) out of range for {n} states"
                )));
            }
            if !(p > T::zero() && p <= T::one()) {
                return Err(Error::domain(format!(
                    "probability {p} at ({s}, {t}) outside (0, 1]"
                )));
            }
            rows[s].push((t, p));
        }
        Self::from_rows(rows)
    }

    /// Builds a chain from per-state rows; each row is sorted here.
    pub fn from_rows(mut rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n = rows.len();
        let tol = T::one() + row_sum_tol::<T>();
        for (s, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(t, _)| t);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::domain(format!(
                        "duplicate transition ({s}, {})",
                        w[0].0
                    )));
                }
            }
            for &(t, p) in row.iter() {
                if t >= n {
                    return Err(Error::domain(format!(
                        "transition ({s}, {t}) out of range for {n} states"
                    )));
                }
                if !(p > T::zero() && p <= T::one()) {
                    return Err(Error::domain(format!(
                        "probability {p} at ({s}, {t}) outside (0, 1]"
                    )));
                }
            }
            let sum: T = row.iter().map(|&(_, p)| p).sum();
            if sum > tol {
                return Err(Error::domain(format!("row {s} sums to {sum} > 1")));
            }
        }
        Ok(Self::assemble(rows))
    }

    /// Builds a matrix whose rows are already sorted and positive but whose row sums are
    /// only as accurate as the spectral data used to derive them (reversals, Doob
    /// transforms). Entries that underflowed to zero are dropped.
    pub(crate) fn from_rows_derived(mut rows: Vec<Vec<(usize, T)>>) -> Self {
        for row in rows.iter_mut() {
            row.retain(|&(_, p)| p > T::zero());
            row.sort_by_key(|&(t, _)| t);
        }
        Self::assemble(rows)
    }

    fn assemble(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut row_sums = Vec::with_capacity(n);
        let mut in_deg = vec![0usize; n];
        row_ptr.push(0);
        for row in &rows {
            let mut sum = T::zero();
            for &(t, p) in row {
                col_idx.push(t);
                vals.push(p);
                in_deg[t] += 1;
                sum += p;
            }
            row_sums.push(sum);
            row_ptr.push(col_idx.len());
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for d in &in_deg {
            col_ptr.push(col_ptr.last().unwrap() + d);
        }
        let mut fill = col_ptr[..n].to_vec();
        let mut row_idx = vec![0; nnz];
        let mut tvals = vec![T::zero(); nnz];
        // Rows are visited in increasing order, so each in-edge list comes out sorted.
        for s in 0..n {
            for k in row_ptr[s]..row_ptr[s + 1] {
                let t = col_idx[k];
                row_idx[fill[t]] = s;
                tvals[fill[t]] = vals[k];
                fill[t] += 1;
            }
        }
        SparseChain {
            n,
            row_ptr,
            col_idx,
            vals,
            col_ptr,
            row_idx,
            tvals,
            row_sums,
        }
    }

    /// Builds a chain from a dense row-major matrix, skipping zeros.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut out = Vec::with_capacity(n);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain(format!(
                    "row {s} has {} entries, expected {n}",
                    row.len()
                )));
            }
            out.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p != T::zero())
                    .map(|(t, &p)| (t, p))
                    .collect(),
            );
        }
        Self::from_rows(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored transitions.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Out-transitions of `s` as `(targets, probabilities)`, targets increasing.
    #[inline]
    pub fn row(&self, s: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[s]..self.row_ptr[s + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    /// Iterates the out-transitions of `s`.
    pub fn row_iter(&self, s: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (c, v) = self.row(s);
        c.iter().copied().zip(v.iter().copied())
    }

    /// In-transitions of `t` as `(sources, probabilities)`, sources increasing.
    #[inline]
    pub fn col(&self, t: usize) -> (&[usize], &[T]) {
        let r = self.col_ptr[t]..self.col_ptr[t + 1];
        (&self.row_idx[r.clone()], &self.tvals[r])
    }

    pub fn out_degree(&self, s: usize) -> usize {
        self.row_ptr[s + 1] - self.row_ptr[s]
    }

    pub fn in_degree(&self, t: usize) -> usize {
        self.col_ptr[t + 1] - self.col_ptr[t]
    }

    /// `M(s, t)`, zero when absent.
    pub fn get(&self, s: usize, t: usize) -> T {
        let (c, v) = self.row(s);
        c.binary_search(&t)
            .map(|k| v[k])
            .unwrap_or_else(|_| T::zero())
    }

    pub fn row_sums(&self) -> &[T] {
        &self.row_sums
    }

    pub fn max_row_sum(&self) -> T {
        self.row_sums.iter().fold(T::zero(), |m, &x| m.max(x))
    }

    /// Every row sums to one within `ROW_SUM_TOL`.
    pub fn is_stochastic(&self) -> bool {
        self.is_stochastic_within(row_sum_tol())
    }

    pub fn is_stochastic_within(&self, tol: T) -> bool {
        self.row_sums.iter().all(|&s| (s - T::one()).abs() <= tol)
    }

    /// `x M` for a row vector `x`.
    pub fn left_mul(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for s in 0..self.n {
            let xs = x[s];
            if xs == T::zero() {
                continue;
            }
            let (c, v) = self.row(s);
            for (&t, &p) in c.iter().zip(v) {
                y[t] += xs * p;
            }
        }
        y
    }

    /// `M f` for a column vector `f`.
    pub fn right_mul(&self, f: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|s| {
                let (c, v) = self.row(s);
                c.iter().zip(v).map(|(&t, &p)| p * f[t]).sum()
            })
            .collect()
    }

    /// The matrix `a M + b I`, used for lazy versions of a chain.
    pub fn affine_with_identity(&self, a: T, b: T) -> Self {
        let rows = (0..self.n)
            .map(|s| {
                let mut row: Vec<(usize, T)> = self.row_iter(s).map(|(t, p)| (t, a * p)).collect();
                match row.binary_search_by_key(&s, |&(t, _)| t) {
                    Ok(k) => row[k].1 += b,
                    Err(k) => row.insert(k, (s, b)),
                }
                row
            })
            .collect();
        Self::from_rows_derived(rows)
    }

    /// Restriction of the matrix to `states` (in the given order), renumbered `0..k`.
    /// Mass leaving the subset is dropped, so the result is substochastic in general.
    pub fn restrict(&self, states: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (i, &s) in states.iter().enumerate() {
            local[s] = i;
        }
        let rows = states
            .iter()
            .map(|&s| {
                self.row_iter(s)
                    .filter(|&(t, _)| local[t] != usize::MAX)
                    .map(|(t, p)| (local[t], p))
                    .collect()
            })
            .collect();
        Self::from_rows_derived(rows)
    }

    /// Dense row-major copy, for small-matrix checks.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (s, row) in d.iter_mut().enumerate() {
            for (t, p) in self.row_iter(s) {
                row[t] = p;
            }
        }
        d
    }

    /// Writes the `n m` / `src dst prob` text format. Probabilities are printed with
    /// shortest round-trip formatting, so a reload is bit-identical.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.nnz())?;
        let mut line = String::new();
        for s in 0..self.n {
            for (t, p) in self.row_iter(s) {
                line.clear();
                let _ = write!(line, "{s} {t} {p}");
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    /// Reads the text format written by [`SparseChain::write_to`]. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| {
                l.as_ref()
                    .map(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                    .unwrap_or(true)
            });
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `n m` header"))?;
        let header = header?;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), hl, "n")?;
        let m: usize = parse_field(it.next(), hl, "m")?;
        let mut triplets = Vec::with_capacity(m);
        for (ln, line) in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let s: usize = parse_field(it.next(), ln, "src")?;
            let t: usize = parse_field(it.next(), ln, "dst")?;
            let p: T = parse_field(it.next(), ln, "prob")?;
            if it.next().is_some() {
                return Err(Error::parse(ln, "trailing fields"));
            }
            triplets.push((s, t, p));
        }
        if triplets.len() != m {
            return Err(Error::parse(
                hl,
                format!("header declares {m} transitions, found {}", triplets.len()),
            ));
        }
        Self::from_triplets(n, triplets)
    }
}

pub(crate) fn parse_field<F: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<F> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing field `{what}`")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid `{what}`: {tok:?}")))
}

/// Dense nonnegative vector over the states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T>(Vec<T>);

impl<T: Scalar> Distribution<T> {
    /// Wraps nonnegative values without normalizing.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::zero()) || !v.is_finite())
        {
            return Err(Error::domain(format!("distribution entry {i} is {v}")));
        }
        Ok(Distribution(values))
    }

    /// Scales nonnegative weights to sum to one.
    pub fn normalized(values: Vec<T>) -> Result<Self> {
        let d = Self::new(values)?;
        let total: T = d.0.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::domain("cannot normalize a zero vector"));
        }
        Ok(Distribution(d.0.into_iter().map(|v| v / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![T::one() / T::from_count(n); n])
    }

    pub fn point(n: usize, s: usize) -> Self {
        let mut v = vec![T::zero(); n];
        v[s] = T::one();
        Distribution(v)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<T>) -> Self {
        Distribution(values)
    }

    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }

    /// Sums to one within `1e-10`.
    pub fn is_probability(&self) -> bool {
        (self.total() - T::one()).abs() <= T::lit(1e-10)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// Total-variation distance `½ Σ |a - b|`.
    pub fn tv_distance(&self, other: &[T]) -> T {
        self.0
            .iter()
            .zip(other)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<T>()
            / T::lit(2.0)
    }

    /// `Σ f(s) self(s)`.
    pub fn expectation(&self, f: &[T]) -> T {
        crate::scalar::dot(&self.0, f)
    }
}

impl<T> Deref for Distribution<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> Index<usize> for Distribution<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}
