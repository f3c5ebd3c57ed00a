//! Multi-threaded gradient accumulation.

use pertcrf_core::crf::{objective, GradientEvaluator, TrainingSet};
use rayon::prelude::*;
use rayon::ThreadPool;

/// Splits the training sentences into one contiguous chunk per thread,
/// accumulates each chunk into its own buffer, then sums the buffers in
/// chunk order. The result depends on the thread count but not on
/// scheduling.
pub struct ParallelEvaluator {
    pool: ThreadPool,
    threads: usize,
    buffers: Vec<Vec<f64>>,
}

impl ParallelEvaluator {
    /// Evaluator backed by a dedicated pool of `threads` workers.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let threads = threads.max(1);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool, threads, buffers: Vec::new() })
    }
}

impl GradientEvaluator for ParallelEvaluator {
    fn evaluate(&mut self, set: &TrainingSet, params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        let n = set.instances().len();
        let chunk = n.div_ceil(self.threads).max(1);
        let ranges: Vec<_> = (0..n).step_by(chunk).map(|s| s..(s + chunk).min(n)).collect();
        self.buffers.resize_with(ranges.len(), Vec::new);
        let buffers = &mut self.buffers[..ranges.len()];
        let partial: Vec<f64> = self.pool.install(|| {
            buffers
                .par_iter_mut()
                .zip(ranges.par_iter())
                .map(|(buf, range)| {
                    buf.clear();
                    buf.resize(params.len(), 0.0);
                    set.accumulate_range(params, range.clone(), buf)
                })
                .collect()
        });
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut nll = 0.0;
        for (value, buf) in partial.iter().zip(buffers.iter()) {
            nll += value;
            for (g, b) in grad.iter_mut().zip(buf) {
                *g += b;
            }
        }
        nll + objective::add_l2(params, l2, grad)
    }
}
