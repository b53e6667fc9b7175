//! Scoped-thread work distribution for the experiment sweeps.
//!
//! Tasks are split round-robin across at most `threads` workers; each
//! worker owns its slice of indices and results are reassembled in task
//! order, so the output is deterministic regardless of scheduling. Any
//! randomness a task needs comes from RNG streams split per task before
//! dispatch.

/// Applies `f` to every item, using up to `threads` worker threads
/// (`None` uses the hardware parallelism). Results come back in input
/// order.
pub fn map_parallel<T, R, F>(items: Vec<T>, threads: Option<usize>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let worker_count = threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
        .min(items.len().max(1));

    if worker_count <= 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }

    let mut slots: Vec<Option<R>> = Vec::with_capacity(items.len());
    slots.resize_with(items.len(), || None);

    // Hand each worker every `worker_count`-th item.
    let mut buckets: Vec<Vec<(usize, T)>> = Vec::with_capacity(worker_count);
    buckets.resize_with(worker_count, Vec::new);
    for (index, item) in items.into_iter().enumerate() {
        buckets[index % worker_count].push((index, item));
    }

    let f = &f;
    let mut finished: Vec<Vec<(usize, R)>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = buckets
            .into_iter()
            .map(|bucket| {
                scope.spawn(move || {
                    bucket.into_iter().map(|(index, item)| (index, f(item))).collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            finished.push(handle.join().expect("worker panicked"));
        }
    });
    for chunk in finished {
        for (index, result) in chunk {
            slots[index] = Some(result);
        }
    }
    slots.into_iter().map(|s| s.expect("all slots filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_input_order() {
        let items: Vec<usize> = (0..100).collect();
        let doubled = map_parallel(items, Some(7), |x| 2 * x);
        assert_eq!(doubled, (0..100).map(|x| 2 * x).collect::<Vec<_>>());
    }

    #[test]
    fn single_thread_path_matches() {
        let items: Vec<i64> = (0..13).collect();
        let a = map_parallel(items.clone(), Some(1), |x| x * x);
        let b = map_parallel(items, Some(4), |x| x * x);
        assert_eq!(a, b);
    }
}
