//! Booting floorplan by recursive min-cut bisection of the slot grid.
//!
//! Rows are split before columns so SLL-bearing die boundaries are cut first.
//! RAM groups are the atomic units. Each bisection minimizes the FIFO width
//! crossing the cut subject to both halves being packable under the utilization
//! limit; ties go to the more balanced split. Up to [`EXACT_LIMIT`] units the
//! search is exhaustive, above it a Fiduccia-Mattheyses refinement runs from a
//! size-balanced start.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use super::Floorplan;
use crate::error::{Error, Result};
use crate::model::{fits_within, utilization_ratio, Configuration, EdgeKind, ResourceVector};
use crate::pipeliner::{RouteState, SllOverflow};
use crate::problem::Problem;

pub const EXACT_LIMIT: usize = 20;
const FM_MAX_PASSES: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct Bisection {
    /// Slots on each side of the cut.
    pub sides: [Vec<usize>; 2],
    pub cut_width: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutReport {
    /// Total FIFO width crossing slot boundaries.
    pub cut_width: u64,
    pub util_limit: f64,
    pub bisections: Vec<Bisection>,
    pub sll_overflows: Vec<SllOverflow>,
}

#[derive(Clone, Copy)]
struct Region {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

impl Region {
    fn slots(&self, problem: &Problem) -> Vec<usize> {
        let device = &problem.instance.device;
        let mut out = Vec::new();
        for y in self.y0..self.y1 {
            for x in self.x0..self.x1 {
                out.push(device.slot_at(x, y).expect("validated grid"));
            }
        }
        out
    }

    fn split(&self) -> Option<(Region, Region)> {
        if self.y1 - self.y0 > 1 {
            let mid = self.y0 + (self.y1 - self.y0) / 2;
            Some((Region { y1: mid, ..*self }, Region { y0: mid, ..*self }))
        } else if self.x1 - self.x0 > 1 {
            let mid = self.x0 + (self.x1 - self.x0) / 2;
            Some((Region { x1: mid, ..*self }, Region { x0: mid, ..*self }))
        } else {
            None
        }
    }
}

/// Per-group resources and inter-group FIFO widths under `config`.
pub(crate) struct UnitGraph {
    pub res: Vec<ResourceVector>,
    pub adj: Vec<Vec<(usize, u64)>>,
}

impl UnitGraph {
    pub(crate) fn new(problem: &Problem, config: &Configuration) -> Self {
        let qor = &problem.instance.qor;
        let groups = &problem.groups;
        let res = (0..groups.len())
            .map(|g| {
                groups
                    .members(g)
                    .iter()
                    .map(|&f| config.resources(qor, f))
                    .sum()
            })
            .collect();
        let mut w: HashMap<(usize, usize), u64> = HashMap::new();
        for e in &problem.instance.design.edges {
            if e.kind != EdgeKind::Fifo {
                continue;
            }
            let (a, b) = (groups.group_of(e.src), groups.group_of(e.dst));
            if a != b {
                *w.entry((a.min(b), a.max(b))).or_default() += e.width;
            }
        }
        let mut adj = vec![Vec::new(); groups.len()];
        let mut pairs: Vec<_> = w.into_iter().collect();
        pairs.sort_unstable();
        for ((a, b), width) in pairs {
            adj[a].push((b, width));
            adj[b].push((a, width));
        }
        UnitGraph { res, adj }
    }
}

/// First-fit-decreasing packing of `units` into `slots`; `None` if some unit fits nowhere.
pub(crate) fn ffd(
    problem: &Problem,
    res: &[ResourceVector],
    units: &[usize],
    slots: &[usize],
    limit: f64,
) -> Option<Vec<(usize, usize)>> {
    let device = &problem.instance.device;
    let mut order: Vec<(usize, f64)> = units
        .iter()
        .map(|&u| {
            let size = slots
                .iter()
                .map(|&s| utilization_ratio(&res[u], device.capacity(s)).unwrap_or(f64::INFINITY))
                .fold(f64::INFINITY, f64::min);
            (u, size)
        })
        .collect();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let mut usage = vec![ResourceVector::ZERO; slots.len()];
    let mut out = Vec::with_capacity(units.len());
    for (u, _) in order {
        let i = (0..slots.len())
            .find(|&i| fits_within(&(usage[i] + res[u]), device.capacity(slots[i]), limit))?;
        usage[i] += res[u];
        out.push((u, slots[i]));
    }
    Some(out)
}

struct Bisector<'a> {
    problem: &'a Problem,
    graph: &'a UnitGraph,
    limit: f64,
}

impl Bisector<'_> {
    fn side_capacity(&self, slots: &[usize]) -> ResourceVector {
        slots
            .iter()
            .map(|&s| *self.problem.instance.device.capacity(s))
            .sum()
    }

    fn balance(&self, usage: &[ResourceVector; 2], caps: &[ResourceVector; 2]) -> f64 {
        (0..2)
            .map(|i| utilization_ratio(&usage[i], &caps[i]).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    fn packable(&self, units: &[usize], side: &[bool], which: bool, slots: &[usize]) -> bool {
        let chosen: Vec<usize> = units
            .iter()
            .zip(side)
            .filter(|(_, &s)| s == which)
            .map(|(&u, _)| u)
            .collect();
        ffd(self.problem, &self.graph.res, &chosen, slots, self.limit).is_some()
    }

    /// Returns side flags (`true` = second side) and the cut width.
    fn exact(&self, units: &[usize], sides: &[Vec<usize>; 2]) -> Option<(Vec<bool>, u64)> {
        let n = units.len();
        let local: HashMap<usize, usize> = units.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let nbrs: Vec<Vec<(usize, u64)>> = units
            .iter()
            .map(|&u| {
                self.graph.adj[u]
                    .iter()
                    .filter_map(|&(v, w)| local.get(&v).map(|&j| (j, w)))
                    .collect()
            })
            .collect();
        let caps = [self.side_capacity(&sides[0]), self.side_capacity(&sides[1])];
        let total: ResourceVector = units.iter().map(|&u| self.graph.res[u]).sum();
        let mut second = ResourceVector::ZERO;
        let mut side = vec![false; n];
        let mut cut = 0u64;
        let mut best: Option<(u64, f64, u32, Vec<bool>)> = None;
        for i in 0u32..(1u32 << n) {
            if i > 0 {
                let bit = i.trailing_zeros() as usize;
                let now = !side[bit];
                for &(j, w) in &nbrs[bit] {
                    if side[j] == now {
                        cut -= w;
                    } else {
                        cut += w;
                    }
                }
                side[bit] = now;
                let r = self.graph.res[units[bit]];
                second = if now {
                    second + r
                } else {
                    second.sub_unchecked(&r)
                };
            }
            let usage = [total.sub_unchecked(&second), second];
            if !(0..2).all(|k| usage[k].le(&scaled(&caps[k], self.limit))) {
                continue;
            }
            let bal = self.balance(&usage, &caps);
            let mask = side
                .iter()
                .enumerate()
                .fold(0u32, |m, (k, &s)| if s { m | (1 << (31 - k)) } else { m });
            let better = match &best {
                None => true,
                Some((bc, bb, bm, _)) => {
                    (cut, bal, mask).partial_cmp(&(*bc, *bb, *bm)) == Some(Ordering::Less)
                }
            };
            if better
                && self.packable(units, &side, false, &sides[0])
                && self.packable(units, &side, true, &sides[1])
            {
                best = Some((cut, bal, mask, side.clone()));
            }
        }
        best.map(|(c, _, _, s)| (s, c))
    }

    fn cut_of(&self, units: &[usize], side: &[bool]) -> u64 {
        let local: HashMap<usize, usize> = units.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let mut cut = 0;
        for (i, &u) in units.iter().enumerate() {
            for &(v, w) in &self.graph.adj[u] {
                if let Some(&j) = local.get(&v) {
                    if i < j && side[i] != side[j] {
                        cut += w;
                    }
                }
            }
        }
        cut
    }

    fn fm(&self, units: &[usize], sides: &[Vec<usize>; 2]) -> Option<(Vec<bool>, u64)> {
        let n = units.len();
        let caps = [self.side_capacity(&sides[0]), self.side_capacity(&sides[1])];
        let limits = [scaled(&caps[0], self.limit), scaled(&caps[1], self.limit)];
        let local: HashMap<usize, usize> = units.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let nbrs: Vec<Vec<(usize, u64)>> = units
            .iter()
            .map(|&u| {
                self.graph.adj[u]
                    .iter()
                    .filter_map(|&(v, w)| local.get(&v).map(|&j| (j, w)))
                    .collect()
            })
            .collect();
        let res: Vec<ResourceVector> = units.iter().map(|&u| self.graph.res[u]).collect();

        // Size-balanced start.
        let mut order: Vec<usize> = (0..n).collect();
        let size = |i: usize| utilization_ratio(&res[i], &caps[0]).unwrap_or(f64::INFINITY);
        order.sort_by(|&a, &b| {
            size(b)
                .partial_cmp(&size(a))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut side = vec![false; n];
        let mut usage = [ResourceVector::ZERO; 2];
        for i in order {
            let rel = |k: usize| {
                utilization_ratio(&(usage[k] + res[i]), &caps[k]).unwrap_or(f64::INFINITY)
            };
            let k = if rel(1) < rel(0) { 1 } else { 0 };
            side[i] = k == 1;
            usage[k] += res[i];
        }

        for _ in 0..FM_MAX_PASSES {
            let mut gain: Vec<i64> = (0..n)
                .map(|i| {
                    nbrs[i]
                        .iter()
                        .map(|&(j, w)| {
                            if side[j] != side[i] {
                                w as i64
                            } else {
                                -(w as i64)
                            }
                        })
                        .sum()
                })
                .collect();
            let mut locked = vec![false; n];
            let mut seq = Vec::new();
            let mut acc = 0i64;
            let mut best = (0i64, 0usize);
            loop {
                let mut pick: Option<(i64, f64, usize)> = None;
                for i in 0..n {
                    if locked[i] {
                        continue;
                    }
                    let from = side[i] as usize;
                    let to = 1 - from;
                    let after_to = usage[to] + res[i];
                    if !after_to.le(&limits[to]) {
                        continue;
                    }
                    let mut after = usage;
                    after[to] = after_to;
                    after[from] = usage[from].sub_unchecked(&res[i]);
                    let bal = self.balance(&after, &caps);
                    let key = (gain[i], bal, i);
                    let better = match pick {
                        None => true,
                        Some((g, b, j)) => {
                            key.0 > g || (key.0 == g && (key.1 < b || (key.1 == b && key.2 < j)))
                        }
                    };
                    if better {
                        pick = Some(key);
                    }
                }
                let Some((g, _, i)) = pick else { break };
                let from = side[i] as usize;
                usage[from] = usage[from].sub_unchecked(&res[i]);
                usage[1 - from] += res[i];
                side[i] = !side[i];
                locked[i] = true;
                gain[i] = -gain[i];
                for &(j, w) in &nbrs[i] {
                    let w = w as i64;
                    if side[j] == side[i] {
                        gain[j] -= 2 * w;
                    } else {
                        gain[j] += 2 * w;
                    }
                }
                acc += g;
                seq.push(i);
                if acc > best.0 {
                    best = (acc, seq.len());
                }
            }
            for &i in seq[best.1..].iter().rev() {
                let from = side[i] as usize;
                usage[from] = usage[from].sub_unchecked(&res[i]);
                usage[1 - from] += res[i];
                side[i] = !side[i];
            }
            if best.0 <= 0 {
                break;
            }
        }

        if self.packable(units, &side, false, &sides[0])
            && self.packable(units, &side, true, &sides[1])
        {
            let cut = self.cut_of(units, &side);
            Some((side, cut))
        } else {
            None
        }
    }

    /// Fallback split induced by first-fit-decreasing over the whole region.
    fn ffd_split(&self, units: &[usize], sides: &[Vec<usize>; 2]) -> Option<(Vec<bool>, u64)> {
        let all: Vec<usize> = sides[0].iter().chain(sides[1].iter()).copied().collect();
        let packed = ffd(self.problem, &self.graph.res, units, &all, self.limit)?;
        let slot_of: HashMap<usize, usize> = packed.into_iter().collect();
        let side: Vec<bool> = units
            .iter()
            .map(|u| sides[1].contains(&slot_of[u]))
            .collect();
        let cut = self.cut_of(units, &side);
        Some((side, cut))
    }

    fn run(
        &self,
        region: Region,
        units: Vec<usize>,
        assign: &mut [usize],
        log: &mut Vec<Bisection>,
    ) -> Result<()> {
        let Some((a, b)) = region.split() else {
            let slot = region.slots(self.problem)[0];
            let usage: ResourceVector = units.iter().map(|&u| self.graph.res[u]).sum();
            if !fits_within(
                &usage,
                self.problem.instance.device.capacity(slot),
                self.limit,
            ) {
                return Err(Error::Infeasible(format!(
                    "slot {slot} overflows during bisection"
                )));
            }
            for u in units {
                assign[u] = slot;
            }
            return Ok(());
        };
        let sides = [a.slots(self.problem), b.slots(self.problem)];
        let exact = units.len() <= EXACT_LIMIT;
        let found = if exact {
            self.exact(&units, &sides)
        } else {
            self.fm(&units, &sides)
                .or_else(|| self.ffd_split(&units, &sides))
        };
        let (side, cut) = found.ok_or_else(|| {
            Error::Infeasible(format!(
                "no packable bisection of {} groups over slots {:?} | {:?}",
                units.len(),
                sides[0],
                sides[1]
            ))
        })?;
        log.push(Bisection {
            sides: sides.clone(),
            cut_width: cut,
            exact,
        });
        let (mut ua, mut ub) = (Vec::new(), Vec::new());
        for (u, s) in units.into_iter().zip(side) {
            if s {
                ub.push(u);
            } else {
                ua.push(u);
            }
        }
        self.run(a, ua, assign, log)?;
        self.run(b, ub, assign, log)
    }
}

fn scaled(cap: &ResourceVector, limit: f64) -> ResourceVector {
    ResourceVector::from_array(
        cap.to_array()
            .map(|c| (c as f64 * limit + 1e-9).floor() as u64),
    )
}

/// Checks that every group fits in at least one slot and that the whole design
/// packs, naming the first offending group otherwise.
pub(crate) fn check_packable(problem: &Problem, res: &[ResourceVector], limit: f64) -> Result<()> {
    let device = &problem.instance.device;
    let design = &problem.instance.design;
    for (g, r) in res.iter().enumerate() {
        if !(0..device.num_slots()).any(|s| fits_within(r, device.capacity(s), limit)) {
            let names: Vec<&str> = problem
                .groups
                .members(g)
                .iter()
                .map(|&f| design.function_name(f))
                .collect();
            return Err(Error::Infeasible(format!(
                "group {names:?} needs {r}, more than any slot offers at {:.0}% utilization",
                limit * 100.0
            )));
        }
    }
    let units: Vec<usize> = (0..res.len()).collect();
    let slots: Vec<usize> = (0..device.num_slots()).collect();
    if ffd(problem, res, &units, &slots, limit).is_none() {
        return Err(Error::Infeasible(format!(
            "design does not pack into the device at {:.0}% utilization",
            limit * 100.0
        )));
    }
    Ok(())
}

/// Min-cut booting floorplan at an explicit utilization limit.
pub fn min_cut_initial_at(
    problem: &Problem,
    config: &Configuration,
    limit: f64,
) -> Result<(Floorplan, CutReport)> {
    let graph = UnitGraph::new(problem, config);
    check_packable(problem, &graph.res, limit)?;
    let device = &problem.instance.device;
    let bis = Bisector {
        problem,
        graph: &graph,
        limit,
    };
    let mut unit_slot = vec![0usize; problem.groups.len()];
    let mut log = Vec::new();
    bis.run(
        Region {
            x0: 0,
            x1: device.width,
            y0: 0,
            y1: device.height,
        },
        (0..problem.groups.len()).collect(),
        &mut unit_slot,
        &mut log,
    )?;
    let assignment: Vec<usize> = (0..problem.num_functions())
        .map(|f| unit_slot[problem.groups.group_of(f)])
        .collect();
    let fp = Floorplan::new(problem, assignment, config);
    let (_, sll_overflows) = RouteState::recompute_lenient(problem, &fp);
    let cut_width = problem
        .instance
        .design
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Fifo && fp.slot_of(e.src) != fp.slot_of(e.dst))
        .map(|e| e.width)
        .sum();
    Ok((
        fp,
        CutReport {
            cut_width,
            util_limit: limit,
            bisections: log,
            sll_overflows,
        },
    ))
}

/// Min-cut booting floorplan at the device's utilization limit, retrying once at
/// 100% before giving up.
pub fn min_cut_initial(
    problem: &Problem,
    config: &Configuration,
) -> Result<(Floorplan, CutReport)> {
    let limit = problem.util_limit();
    match min_cut_initial_at(problem, config, limit) {
        Ok(r) => Ok(r),
        Err(Error::Infeasible(msg)) if limit < 1.0 => {
            log::warn!("booting infeasible at {limit}: {msg}; retrying at 1.0");
            min_cut_initial_at(problem, config, 1.0)
        }
        Err(e) => Err(e),
    }
}
