use std::time::Instant;

/// Cost and convergence record of one iterative solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub coordinate_updates: u64,
    pub edges_processed: u64,
    /// Stored transitions of the solved matrix; the unit of a normalized iteration.
    pub total_edges: usize,
    pub normalized_iterations: f64,
    pub wall_clock_ms: f64,
    /// `(normalized iterations, residual)` samples, taken each time the normalized
    /// iteration count crosses a multiple of 0.1, plus the start and the final state.
    pub residual_trace: Vec<(f64, f64)>,
    /// Residual in the solver's stopping norm at exit.
    pub final_residual: f64,
}

/// Accumulates work and samples the residual trace on the 0.1 grid.
#[derive(Debug)]
pub(crate) struct CostMeter {
    stats: SolveStats,
    next_mark: u64,
    started: Instant,
}

impl CostMeter {
    pub fn new(total_edges: usize, initial_residual: f64) -> Self {
        let stats = SolveStats {
            total_edges,
            residual_trace: vec![(0.0, initial_residual)],
            ..Default::default()
        };
        CostMeter {
            stats,
            next_mark: 1,
            started: Instant::now(),
        }
    }

    /// Records one coordinate update touching `edges` stored transitions; `residual` is
    /// the current residual estimate, sampled if a grid mark was crossed.
    #[inline]
    pub fn update(&mut self, edges: usize, residual: f64) {
        self.stats.coordinate_updates += 1;
        self.add_edges(edges, residual);
    }

    #[inline]
    pub fn add_edges(&mut self, edges: usize, residual: f64) {
        self.stats.edges_processed += edges as u64;
        let total = self.stats.total_edges as u64;
        if total == 0 {
            return;
        }
        while self.stats.edges_processed * 10 >= self.next_mark * total {
            self.stats
                .residual_trace
                .push((self.next_mark as f64 / 10.0, residual));
            self.next_mark += 1;
        }
    }

    pub fn bulk_updates(&mut self, updates: u64) {
        self.stats.coordinate_updates += updates;
    }

    pub fn updates(&self) -> u64 {
        self.stats.coordinate_updates
    }

    pub fn finish(mut self, residual: f64) -> SolveStats {
        let total = self.stats.total_edges;
        self.stats.normalized_iterations = if total == 0 {
            0.0
        } else {
            self.stats.edges_processed as f64 / total as f64
        };
        if self.stats.residual_trace.last().map(|&(x, _)| x)
            != Some(self.stats.normalized_iterations)
        {
            self.stats
                .residual_trace
                .push((self.stats.normalized_iterations, residual));
        } else if let Some(last) = self.stats.residual_trace.last_mut() {
            last.1 = residual;
        }
        self.stats.final_residual = residual;
        self.stats.wall_clock_ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.stats
    }
}
