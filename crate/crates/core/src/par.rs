//! Deterministic parallel reductions keyed by sample index.
//!
//! Work is split into fixed chunks of indices; each chunk is mapped in
//! parallel and folded sequentially in index order, so results depend only on
//! the indices, never on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Indices mapped per parallel batch.
pub const CHUNK: u64 = 1 << 14;

/// Independent random stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Map `0..count` in parallel and fold the results in index order.
pub fn map_fold<T, A, M, F>(count: u64, init: A, map: M, mut fold: F) -> A
where
    T: Send,
    M: Fn(u64) -> T + Sync,
    F: FnMut(&mut A, u64, T),
{
    let mut acc = init;
    let mut start = 0;
    while start < count {
        let end = (start + CHUNK).min(count);
        let batch: Vec<T> = (start..end).into_par_iter().map(&map).collect();
        for (i, item) in batch.into_iter().enumerate() {
            fold(&mut acc, start + i as u64, item);
        }
        start = end;
    }
    acc
}

/// Map `0..count` in parallel, keeping index order.
pub fn map_collect<T, M>(count: u64, map: M) -> Vec<T>
where
    T: Send,
    M: Fn(u64) -> T + Sync,
{
    (0..count).into_par_iter().map(&map).collect()
}

/// Run `f` on a pool of `workers` threads (`0` keeps the global pool).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
