use serde::Serialize;

use crate::model::{Configuration, QoRLibrary};

/// The functions sharing the largest latency and the next latency level below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bottleneck {
    pub batch: Vec<usize>,
    pub l1: u64,
    /// Largest latency strictly below `l1`; 0 when there is none.
    pub l2: u64,
}

/// Picks the bottleneck batch among functions not yet excluded.
pub fn select_bottleneck(
    qor: &QoRLibrary,
    config: &Configuration,
    excluded: &[bool],
) -> Option<Bottleneck> {
    let mut l1 = 0u64;
    let mut l2 = 0u64;
    let mut batch = Vec::new();
    for f in (0..config.len()).filter(|&f| !excluded[f]) {
        let l = config.latency(qor, f);
        if batch.is_empty() || l > l1 {
            if !batch.is_empty() {
                l2 = l2.max(l1);
            }
            l1 = l;
            batch.clear();
            batch.push(f);
        } else if l == l1 {
            batch.push(f);
        } else {
            l2 = l2.max(l);
        }
    }
    (!batch.is_empty()).then_some(Bottleneck { batch, l1, l2 })
}

/// Design space of one bottleneck function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    /// Point indices with latency below the threshold, latency ascending.
    pub ds: Vec<usize>,
    /// The slowest point of `ds`.
    pub dp: Option<usize>,
}

/// Keeps the points of `f` faster than `l2`, or faster than `l1` when `l2` does not
/// lie below the function's own latency (no other level to aim for).
pub fn prune(qor: &QoRLibrary, config: &Configuration, f: usize, l1: u64, l2: u64) -> Pruned {
    let own = config.latency(qor, f);
    let threshold = if l2 == 0 || l2 >= own { l1 } else { l2 };
    let ds: Vec<usize> = qor
        .points(f)
        .iter()
        .enumerate()
        .filter(|(_, p)| p.latency < threshold)
        .map(|(i, _)| i)
        .collect();
    let dp = ds.last().copied();
    Pruned { ds, dp }
}

/// Up to `n` points strictly faster than `dp`, walking down from it.
pub fn look_ahead_window(qor: &QoRLibrary, f: usize, dp: usize, n: usize) -> Vec<usize> {
    let lat = qor.point(f, dp).latency;
    (0..dp)
        .rev()
        .filter(|&i| qor.point(f, i).latency < lat)
        .take(n)
        .collect()
}

/// Points with latency strictly between `dp`'s and `l1`, ascending.
pub fn look_back_window(qor: &QoRLibrary, f: usize, dp: usize, l1: u64) -> Vec<usize> {
    let lat = qor.point(f, dp).latency;
    (dp + 1..qor.num_points(f))
        .filter(|&i| {
            let l = qor.point(f, i).latency;
            l > lat && l < l1
        })
        .collect()
}

/// Lock-step targets for a batch: step `k` takes each member's `k`-th window entry,
/// holding members with shorter windows at their last entry. Empty if any window is.
pub fn lockstep(batch: &[usize], windows: &[Vec<usize>]) -> Vec<Vec<(usize, usize)>> {
    if windows.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let steps = windows.iter().map(Vec::len).max().unwrap_or(0);
    (0..steps)
        .map(|k| {
            batch
                .iter()
                .zip(windows)
                .map(|(&f, w)| (f, w[k.min(w.len() - 1)]))
                .collect()
        })
        .collect()
}
