//! Fixed-size worker fan-out over contiguous slices.

use std::num::NonZeroUsize;
use std::thread;

/// Number of hardware threads, at least one.
pub fn available_workers() -> usize {
    thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

/// Splits `items` into at most `workers` contiguous chunks, runs `f` on each
/// in its own scoped thread and returns results in chunk order.
pub(crate) fn map_chunks<I, R, F>(items: &[I], workers: usize, f: F) -> Vec<R>
where
    I: Sync,
    R: Send,
    F: Fn(&[I]) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return vec![f(items)];
    }
    let chunk = items.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                scope.spawn(move || f(c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_chunk_order() {
        let items: Vec<u32> = (0..103).collect();
        for workers in [1, 2, 3, 8, 200] {
            let out: Vec<u32> = map_chunks(&items, workers, |c| c.to_vec())
                .into_iter()
                .flatten()
                .collect();
            assert_eq!(out, items);
        }
        assert_eq!(map_chunks(&[] as &[u32], 4, |c| c.len()), vec![0]);
    }
}
