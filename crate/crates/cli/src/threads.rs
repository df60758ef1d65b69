//! Scoped-thread executor for the independent per-age-level diffusion
//! solves.
//!
//! Levels are split into contiguous blocks, one per worker; every level is
//! still processed by the same pure task writing only its own slice, so the
//! output is bitwise identical to the sequential executor for any thread
//! count.

use swarmsim_core::diffusion::CgFailure;
use swarmsim_core::StepExecutor;

#[derive(Debug, Clone, Copy)]
pub struct ThreadedExecutor {
    pub threads: usize,
}

impl StepExecutor for ThreadedExecutor {
    fn run_levels(
        &self,
        values: &mut [f64],
        level_len: usize,
        results: &mut [Result<u32, CgFailure>],
        task: &(dyn Fn(usize, &mut [f64]) -> Result<u32, CgFailure> + Sync),
    ) {
        let n_levels = results.len();
        debug_assert_eq!(values.len(), n_levels * level_len);
        let workers = self.threads.max(1).min(n_levels.max(1));
        if workers <= 1 {
            for (k, chunk) in values.chunks_exact_mut(level_len).enumerate() {
                results[k] = task(k, chunk);
            }
            return;
        }
        let per_worker = n_levels.div_ceil(workers);
        std::thread::scope(|scope| {
            let mut rest_values = values;
            let mut rest_results = results;
            let mut base = 0usize;
            while !rest_results.is_empty() {
                let take = per_worker.min(rest_results.len());
                let (block_values, tail_values) = rest_values.split_at_mut(take * level_len);
                let (block_results, tail_results) = rest_results.split_at_mut(take);
                rest_values = tail_values;
                rest_results = tail_results;
                let level_base = base;
                base += take;
                scope.spawn(move || {
                    for (i, chunk) in block_values.chunks_exact_mut(level_len).enumerate() {
                        block_results[i] = task(level_base + i, chunk);
                    }
                });
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarmsim_core::SequentialExecutor;

    fn run_with(executor: &dyn StepExecutor, n_levels: usize, level_len: usize) -> Vec<f64> {
        let mut values: Vec<f64> = (0..n_levels * level_len).map(|i| i as f64 * 0.25).collect();
        let mut results = vec![Ok(0u32); n_levels];
        let task = |k: usize, chunk: &mut [f64]| -> Result<u32, CgFailure> {
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = (*v + k as f64).sin() * (i as f64 + 1.0);
            }
            Ok(k as u32)
        };
        executor.run_levels(&mut values, level_len, &mut results, &task);
        for (k, r) in results.iter().enumerate() {
            assert_eq!(*r, Ok(k as u32));
        }
        values
    }

    #[test]
    fn partitionings_agree_bitwise() {
        let baseline = run_with(&SequentialExecutor, 9, 17);
        for threads in [1usize, 2, 3, 4, 16] {
            let out = run_with(&ThreadedExecutor { threads }, 9, 17);
            assert!(
                baseline
                    .iter()
                    .zip(&out)
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                "threads = {threads} diverged"
            );
        }
    }
}
