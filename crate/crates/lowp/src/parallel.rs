//! Multi-threaded fused quantization. Variates are indexed by flat element
//! position, so the result is bit-identical for any thread count.

use lowp_core::{quantize_fused, FusedKernel, QuantSpec, Result, Tensor};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Chunks smaller than this are not worth a task.
const MIN_CHUNK: usize = 1 << 14;

#[derive(Debug)]
pub struct ParallelQuantizer {
    threads: usize,
    pool: Option<ThreadPool>,
}

impl ParallelQuantizer {
    /// `threads <= 1` runs on the calling thread without a pool.
    pub fn new(threads: usize) -> Self {
        let threads = threads.max(1);
        let pool = (threads > 1).then(|| {
            ThreadPoolBuilder::new().num_threads(threads).build().expect("failed to start quantization thread pool")
        });
        Self { threads, pool }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn quantize(&self, t: &Tensor, spec: &QuantSpec) -> Result<Tensor> {
        let Some(pool) = &self.pool else {
            return quantize_fused(t, spec);
        };
        let kernel = FusedKernel::prepare(t, spec)?;
        let chunk = t.len().div_ceil(self.threads).max(MIN_CHUNK);
        let mut out = vec![0.0f32; t.len()];
        pool.install(|| {
            out.par_chunks_mut(chunk)
                .zip(t.data().par_chunks(chunk))
                .enumerate()
                .try_for_each(|(i, (dst, src))| kernel.apply(src, dst, i * chunk))
        })?;
        Tensor::new(t.shape().to_vec(), out)
    }
}
