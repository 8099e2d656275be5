//! Plain Monte-Carlo estimate of a value at one state.

use rand::Rng;

use super::EvalProblem;
use crate::error::{Error, Result};
use crate::pagerank::sample_row;
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Sample mean of `Σ_{t <= horizon} γᵗ r(X_t)` over trajectories from `start`.
///
/// The truncation bias is at most `γ^{horizon+1} max|r| / (1 − γ)`.
pub fn mc_value<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    start: usize,
    samples: u64,
    horizon: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(problem.gamma < T::one()) {
        return Err(Error::domain("Monte-Carlo evaluation needs γ < 1"));
    }
    if start >= problem.n() {
        return Err(Error::domain(format!("start state {start} out of range")));
    }
    if samples < 2 {
        return Err(Error::domain("at least two samples are required"));
    }
    let gamma = problem.gamma.as_f64();
    let reward: Vec<f64> = problem.reward.iter().map(|r| r.as_f64()).collect();
    let mut rng = seeded(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut x = start;
        let mut discount = 1.0;
        let mut ret = reward[x];
        for _ in 0..horizon {
            discount *= gamma;
            if discount == 0.0 {
                break;
            }
            x = sample_row(problem.chain, x, rng.random::<f64>());
            ret += discount * reward[x];
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (var / k).sqrt(),
        samples,
    })
}
