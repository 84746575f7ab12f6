//! Small fixed worker pool with deterministic, index-ordered results.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::error::{BenchError, Result};

/// Effective worker count: the `REVAMP_THREADS` environment variable wins
/// over the CLI flag, which wins over the machine's available parallelism.
pub fn resolve_threads(cli: Option<usize>) -> Result<usize> {
    if let Ok(raw) = std::env::var("REVAMP_THREADS") {
        let parsed: usize = raw.parse().map_err(|_| {
            BenchError::Config(format!("REVAMP_THREADS: invalid thread count `{raw}`"))
        })?;
        if parsed < 1 {
            return Err(BenchError::Config(
                "REVAMP_THREADS: must be at least 1".into(),
            ));
        }
        return Ok(parsed);
    }
    if let Some(t) = cli {
        if t < 1 {
            return Err(BenchError::Config("--threads: must be at least 1".into()));
        }
        return Ok(t);
    }
    Ok(std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1))
}

/// Runs `job(i)` for `i in 0..count` on up to `threads` workers and returns
/// the results in index order. Work is handed out through a shared counter,
/// so the output never depends on scheduling.
pub fn parallel_map<T, F>(count: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(count) {
            let tx = tx.clone();
            let next = &next;
            let job = &job;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                if tx.send((i, job(i))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for (i, value) in rx {
        slots[i] = Some(value);
    }
    slots
        .into_iter()
        .map(|v| v.expect("every index produced"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_index_ordered_for_any_thread_count() {
        for threads in [1, 2, 5, 16] {
            let out = parallel_map(37, threads, |i| i * i);
            assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
