//! Dense oracles shared by the integration tests.

#![allow(dead_code)]

use mdp_pagerank::SparseChain;
use nalgebra::{DMatrix, DVector};

pub fn dense(p: &SparseChain<f64>) -> DMatrix<f64> {
    let n = p.n();
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        for (t, x) in p.row_iter(s) {
            m[(s, t)] = x;
        }
    }
    m
}

/// `(I − γP)⁻¹ r` by LU.
pub fn dense_value(p: &SparseChain<f64>, gamma: f64, r: &[f64]) -> Vec<f64> {
    let n = p.n();
    let a = DMatrix::identity(n, n) - dense(p) * gamma;
    let v = a
        .lu()
        .solve(&DVector::from_column_slice(r))
        .expect("nonsingular");
    v.iter().copied().collect()
}

/// Solution of the row system `x (I − cM) = b`.
pub fn dense_row_solve(m: &SparseChain<f64>, c: f64, b: &[f64]) -> Vec<f64> {
    let n = m.n();
    let a = (DMatrix::identity(n, n) - dense(m) * c).transpose();
    a.lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular")
        .iter()
        .copied()
        .collect()
}

pub fn rel_inf_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
