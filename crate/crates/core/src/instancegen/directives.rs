//! The per-template directive space: PIPELINE II and UNROLL factor per loop,
//! ARRAY_PARTITION type and dimension plus BIND_STORAGE per array.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::LoopInfo;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayInfo {
    pub name: String,
    /// Size of each dimension, outermost first.
    pub dims: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Block,
    Cyclic,
    Complete,
}

impl PartitionKind {
    pub const ALL: [PartitionKind; 3] = [
        PartitionKind::Block,
        PartitionKind::Cyclic,
        PartitionKind::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Block => "block",
            PartitionKind::Cyclic => "cyclic",
            PartitionKind::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Storage {
    Bram,
    Uram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoopDirective {
    pub pipeline_ii: Option<u64>,
    pub unroll: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrayDirective {
    /// Partition type and 1-based dimension.
    pub partition: Option<(PartitionKind, u32)>,
    pub storage: Storage,
}

/// One directive configuration, aligned with the loop and array lists it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Skeleton {
    pub loops: Vec<LoopDirective>,
    pub arrays: Vec<ArrayDirective>,
}

impl Skeleton {
    pub fn is_baseline(&self) -> bool {
        self.loops
            .iter()
            .all(|l| l.pipeline_ii.is_none() && l.unroll == 1)
            && self
                .arrays
                .iter()
                .all(|a| a.partition.is_none() && a.storage == Storage::Bram)
    }

    /// Directive map in the QoR library's `DIRECTIVE:target` form. BRAM storage is
    /// the tool default and is left implicit.
    pub fn directives(&self, loops: &[LoopInfo], arrays: &[ArrayInfo]) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (d, l) in self.loops.iter().zip(loops) {
            if let Some(ii) = d.pipeline_ii {
                out.insert(format!("PIPELINE:{}", l.label), format!("II={ii}"));
            }
            if d.unroll > 1 {
                out.insert(
                    format!("UNROLL:{}", l.label),
                    format!("factor={}", d.unroll),
                );
            }
        }
        for (d, a) in self.arrays.iter().zip(arrays) {
            if let Some((kind, dim)) = d.partition {
                out.insert(
                    format!("ARRAY_PARTITION:{}", a.name),
                    format!("type={} dim={dim}", kind.name()),
                );
            }
            if d.storage == Storage::Uram {
                out.insert(format!("BIND_STORAGE:{}", a.name), "impl=uram".to_string());
            }
        }
        out
    }
}

/// PIPELINE choices: `None` (off) then II from MinII to min(4 MinII, IterLat).
pub fn pipeline_options(l: &LoopInfo) -> Vec<Option<u64>> {
    let hi = (4 * l.min_ii).min(l.iter_latency).max(l.min_ii);
    std::iter::once(None)
        .chain((l.min_ii..=hi).map(Some))
        .collect()
}

/// UNROLL factors: powers of two below the bound, then the bound itself.
pub fn unroll_factors(l: &LoopInfo) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 1;
    while f < l.bound {
        out.push(f);
        f *= 2;
    }
    out.push(l.bound.max(1));
    out
}

/// ARRAY_PARTITION choices: `None` then every type for every dimension.
pub fn partition_options(a: &ArrayInfo) -> Vec<Option<(PartitionKind, u32)>> {
    let mut out = vec![None];
    for dim in 1..=a.dims.len() as u32 {
        out.extend(PartitionKind::ALL.iter().map(|&k| Some((k, dim))));
    }
    out
}

pub const STORAGE_OPTIONS: [Storage; 2] = [Storage::Bram, Storage::Uram];

/// Mixed-radix view of the full cartesian product.
struct Space {
    loops: Vec<(Vec<Option<u64>>, Vec<u64>)>,
    arrays: Vec<Vec<Option<(PartitionKind, u32)>>>,
}

impl Space {
    fn new(loops: &[LoopInfo], arrays: &[ArrayInfo]) -> Self {
        Space {
            loops: loops
                .iter()
                .map(|l| (pipeline_options(l), unroll_factors(l)))
                .collect(),
            arrays: arrays.iter().map(partition_options).collect(),
        }
    }

    fn radices(&self) -> Vec<u128> {
        let mut r = Vec::new();
        for (p, u) in &self.loops {
            r.push(p.len() as u128);
            r.push(u.len() as u128);
        }
        for a in &self.arrays {
            r.push(a.len() as u128);
            r.push(STORAGE_OPTIONS.len() as u128);
        }
        r
    }

    fn size(&self) -> u128 {
        self.radices().iter().product()
    }

    /// Index 0 is the baseline.
    fn decode(&self, mut idx: u128) -> Skeleton {
        let mut next = |n: usize| {
            let v = (idx % n as u128) as usize;
            idx /= n as u128;
            v
        };
        let loops = self
            .loops
            .iter()
            .map(|(p, u)| LoopDirective {
                pipeline_ii: p[next(p.len())],
                unroll: u[next(u.len())],
            })
            .collect();
        let arrays = self
            .arrays
            .iter()
            .map(|a| ArrayDirective {
                partition: a[next(a.len())],
                storage: STORAGE_OPTIONS[next(STORAGE_OPTIONS.len())],
            })
            .collect();
        Skeleton { loops, arrays }
    }
}

/// Number of configurations before capping.
pub fn space_size(loops: &[LoopInfo], arrays: &[ArrayInfo]) -> u128 {
    Space::new(loops, arrays).size()
}

/// Enumerates the directive space, baseline first. Above `cap` configurations the
/// enumeration order is cut into `cap - 1` equal strata and one configuration is
/// drawn from each, after the baseline.
pub fn gen_directive_space(
    loops: &[LoopInfo],
    arrays: &[ArrayInfo],
    cap: usize,
    rng: &mut impl Rng,
) -> Vec<Skeleton> {
    let space = Space::new(loops, arrays);
    let total = space.size();
    let cap = cap.max(1);
    if total <= cap as u128 {
        return (0..total).map(|i| space.decode(i)).collect();
    }
    let rest = total - 1;
    let strata = (cap - 1) as u128;
    let mut out = vec![space.decode(0)];
    for k in 0..strata {
        let lo = 1 + k * rest / strata;
        let hi = 1 + (k + 1) * rest / strata;
        out.push(space.decode(rng.gen_range(lo..hi)));
    }
    out
}
