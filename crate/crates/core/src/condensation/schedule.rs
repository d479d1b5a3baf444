//! Leaf scheduling under a memory budget.
//!
//! The inner level runs up to `batch_size` leaves at once on a small worker
//! pool; the outer level keeps finished per-leaf results resident until the
//! buffer would exceed `resident_limit`, then hands them to a sink in one
//! flush.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{HpsError, Result};

/// Whether per-leaf solvers survive the build stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CachePolicy {
    /// Recompute leaf factorizations in every solve (lowest memory).
    #[default]
    Discard,
    /// Keep the factorized interior blocks for reuse across solves.
    Keep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    /// Bytes available for transient leaf workspaces and resident blocks.
    pub memory_budget: usize,
    pub batch_size: usize,
    pub resident_limit: usize,
    pub workers: usize,
    pub cache: CachePolicy,
}

impl Default for BatchSchedule {
    fn default() -> Self {
        Self {
            memory_budget: 2 << 30,
            batch_size: 8,
            resident_limit: 64,
            workers: 1,
            cache: CachePolicy::Discard,
        }
    }
}

/// Effective batch and resident sizes after applying the budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Plan {
    pub batch: usize,
    pub resident: usize,
}

impl BatchSchedule {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_cache(mut self, cache: CachePolicy) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_memory_budget(mut self, bytes: usize) -> Self {
        self.memory_budget = bytes;
        self
    }

    /// Clamps batch and resident sizes so that `batch` workspaces of
    /// `workspace` bytes plus the other resident blocks of `resident_bytes`
    /// each fit in the budget.
    pub fn plan(&self, workspace: usize, resident_bytes: usize) -> Result<Plan> {
        if self.memory_budget < workspace {
            return Err(HpsError::BudgetTooSmall {
                budget: self.memory_budget,
                required: workspace,
            });
        }
        let cap = self.memory_budget.checked_div(workspace).unwrap_or(usize::MAX);
        let batch = self.batch_size.max(1).min(cap).max(1);
        let spare = self.memory_budget - batch * workspace;
        let extra = spare.checked_div(resident_bytes).unwrap_or(usize::MAX);
        let resident = self.resident_limit.max(batch).min(batch.saturating_add(extra));
        Ok(Plan { batch, resident })
    }
}

/// Internal accounting of transient allocations.
#[derive(Debug, Default)]
pub struct MemoryMeter {
    current: AtomicUsize,
    peak: AtomicUsize,
}

impl MemoryMeter {
    pub fn acquire(&self, bytes: usize) {
        let now = self.current.fetch_add(bytes, Ordering::SeqCst) + bytes;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    pub fn release(&self, bytes: usize) {
        self.current.fetch_sub(bytes, Ordering::SeqCst);
    }

    pub fn current(&self) -> usize {
        self.current.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

/// Counters reported by one scheduled pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ScheduleStats {
    pub batch: usize,
    pub resident: usize,
    pub batches: usize,
    pub flushes: usize,
    pub peak_bytes: usize,
}

/// Runs `work` on items `0..n` and passes finished results to `sink` in
/// flushes, never holding more than `plan.resident` results.
///
/// `workspace` is charged to the meter while an item is in flight and
/// `resident_bytes` while its result waits for a flush. Results within a flush
/// are in ascending item order. The first error by item index is returned.
pub(crate) fn run_batched<T, W, S>(
    n: usize,
    plan: Plan,
    workers: usize,
    workspace: usize,
    resident_bytes: usize,
    work: W,
    mut sink: S,
) -> Result<ScheduleStats>
where
    T: Send,
    W: Fn(usize) -> Result<T> + Sync,
    S: FnMut(Vec<(usize, T)>) -> Result<()>,
{
    let meter = MemoryMeter::default();
    let mut stats = ScheduleStats {
        batch: plan.batch,
        resident: plan.resident,
        ..ScheduleStats::default()
    };
    let mut buffer: Vec<(usize, T)> = Vec::new();
    let run_one = |k: usize| -> Result<T> {
        meter.acquire(workspace);
        let r = work(k);
        meter.release(workspace);
        if r.is_ok() {
            meter.acquire(resident_bytes);
        }
        r
    };

    let mut start = 0;
    while start < n {
        let end = (start + plan.batch).min(n);
        if buffer.len() + (end - start) > plan.resident {
            let out = std::mem::take(&mut buffer);
            let count = out.len();
            sink(out)?;
            meter.release(count * resident_bytes);
            stats.flushes += 1;
        }
        let mut results = run_parallel(start, end, workers, &run_one)?;
        results.sort_by_key(|(k, _)| *k);
        for (k, r) in results {
            buffer.push((k, r?));
        }
        stats.batches += 1;
        start = end;
    }
    if !buffer.is_empty() {
        let count = buffer.len();
        sink(buffer)?;
        meter.release(count * resident_bytes);
        stats.flushes += 1;
    }
    stats.peak_bytes = meter.peak();
    Ok(stats)
}

fn run_parallel<T, F>(start: usize, end: usize, workers: usize, f: &F) -> Result<Vec<(usize, Result<T>)>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let threads = workers.max(1).min(end - start);
    if threads <= 1 {
        return Ok((start..end).map(|k| (k, f(k))).collect());
    }
    let next = AtomicUsize::new(start);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= end {
                            break;
                        }
                        out.push((k, f(k)));
                    }
                    out
                })
            })
            .collect();
        let mut all = Vec::with_capacity(end - start);
        for h in handles {
            all.extend(h.join().map_err(|_| HpsError::WorkerPanicked)?);
        }
        Ok(all)
    })
}
