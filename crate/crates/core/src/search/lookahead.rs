use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{DesignGraph, LoopInfo, QoRLibrary};

/// Look-ahead window used when no template carries loop metadata.
pub const DEFAULT_LOOKAHEAD: usize = 8;

/// Upper summation limit in the step-number formula. `Min` checks at most three
/// (two for the combined term) levels from the innermost loop; `Max` sums every level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelBound {
    #[default]
    Min,
    Max,
}

fn log2_capped(v: u64) -> usize {
    let v = v.clamp(1, 64);
    (63 - v.leading_zeros()) as usize
}

fn levels(n: usize, k: usize, bound: LevelBound) -> usize {
    match bound {
        LevelBound::Min => n.min(k),
        LevelBound::Max => n,
    }
}

/// Step numbers (N1, N2, N3) for a single loop nest, innermost loop first.
pub fn nest_terms(nest: &[&LoopInfo], bound: LevelBound) -> (usize, usize, usize) {
    let n = nest.len();
    let sum = |k: usize, f: &dyn Fn(&LoopInfo) -> u64| -> usize {
        nest.iter()
            .take(levels(n, k, bound))
            .map(|l| log2_capped(f(l)))
            .sum()
    };
    (
        sum(3, &|l| l.iter_latency),
        sum(3, &|l| l.bound),
        sum(2, &|l| l.bound),
    )
}

/// Look-ahead step number N = N1 + N2 + N3, each term maximized over every loop
/// nest of the templates the design uses. Falls back to `default` without loops.
pub fn compute_lookahead_n(
    qor: &QoRLibrary,
    graph: &DesignGraph,
    bound: LevelBound,
    default: usize,
) -> usize {
    let mut used: Vec<&str> = (0..graph.num_functions())
        .map(|f| qor.template_name(f))
        .collect();
    used.sort_unstable();
    used.dedup();
    let mut best: Option<(usize, usize, usize)> = None;
    for name in used {
        let t = qor
            .templates()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
            .expect("resolved template");
        let mut nests: BTreeMap<&str, Vec<&LoopInfo>> = BTreeMap::new();
        for l in &t.loops {
            nests.entry(l.nest_name()).or_default().push(l);
        }
        for nest in nests.values_mut() {
            nest.sort_by_key(|l| l.depth);
            let (a, b, c) = nest_terms(nest, bound);
            best = Some(match best {
                None => (a, b, c),
                Some((x, y, z)) => (x.max(a), y.max(b), z.max(c)),
            });
        }
    }
    best.map_or(default, |(a, b, c)| a + b + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(depth: u32, bound: u64, il: u64) -> LoopInfo {
        LoopInfo {
            label: format!("L{depth}"),
            nest: Some("n".into()),
            depth,
            bound,
            min_ii: 1,
            iter_latency: il,
        }
    }

    #[test]
    fn single_level_examples() {
        assert_eq!(nest_terms(&[&lp(1, 64, 64)], LevelBound::Min), (6, 6, 6));
        assert_eq!(nest_terms(&[&lp(1, 2, 2)], LevelBound::Min), (1, 1, 1));
    }

    #[test]
    fn deep_nests_respect_the_bound() {
        let ls: Vec<LoopInfo> = (1..=4).map(|d| lp(d, 8, 4)).collect();
        let refs: Vec<&LoopInfo> = ls.iter().collect();
        assert_eq!(nest_terms(&refs, LevelBound::Min), (6, 9, 6));
        assert_eq!(nest_terms(&refs, LevelBound::Max), (8, 12, 12));
    }

    #[test]
    fn values_above_64_are_capped() {
        assert_eq!(nest_terms(&[&lp(1, 1000, 1)], LevelBound::Min), (0, 6, 6));
    }
}
