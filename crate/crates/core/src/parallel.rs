//! Worker-thread control for op kernels.
//!
//! Kernels that parallelize do so over disjoint output ranges, so results are
//! bit-identical at any thread count; `set_threads(1)` simply forces the
//! serial path.

use std::sync::atomic::{AtomicUsize, Ordering};

static THREADS: AtomicUsize = AtomicUsize::new(1);

pub fn set_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}

pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed)
}

/// Run `body(start, end)` over disjoint chunks of `0..len`.
///
/// Each chunk writes only to its own output range; chunk boundaries do not
/// depend on the thread count observed mid-run.
pub fn for_each_chunk<F>(len: usize, body: F)
where
    F: Fn(usize, usize) + Sync,
{
    let n = threads().min(len.max(1));
    if n <= 1 || len < 2 {
        body(0, len);
        return;
    }
    let chunk = len.div_ceil(n);
    std::thread::scope(|scope| {
        for t in 0..n {
            let start = t * chunk;
            let end = ((t + 1) * chunk).min(len);
            if start >= end {
                break;
            }
            let body = &body;
            scope.spawn(move || body(start, end));
        }
    });
}

/// Split a mutable slice into per-chunk pieces of `chunk_len` each and run
/// `body(chunk_index, piece)` in parallel. `data.len()` must equal
/// `chunks * chunk_len`.
pub fn for_each_chunk_mut<T: Send, F>(data: &mut [T], chunks: usize, body: F)
where
    F: Fn(usize, &mut [T]) + Sync,
{
    let chunk_len = if chunks == 0 { 0 } else { data.len() / chunks };
    debug_assert_eq!(chunk_len * chunks, data.len());
    let n = threads().min(chunks.max(1));
    if n <= 1 || chunks < 2 {
        for (i, piece) in data.chunks_mut(chunk_len.max(1)).enumerate() {
            body(i, piece);
        }
        return;
    }
    std::thread::scope(|scope| {
        let mut rest = data;
        let per = chunks.div_ceil(n);
        let mut idx = 0;
        while idx < chunks {
            let take = per.min(chunks - idx);
            let (piece, tail) = rest.split_at_mut(take * chunk_len);
            rest = tail;
            let body = &body;
            let base = idx;
            scope.spawn(move || {
                for (j, sub) in piece.chunks_mut(chunk_len).enumerate() {
                    body(base + j, sub);
                }
            });
            idx += take;
        }
    });
}
