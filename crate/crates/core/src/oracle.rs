//! Exact branch-and-bound over configurations and slot assignments for small
//! instances, plus the optimality check of a finished search.
//!
//! SLL feasibility here tries every half choice when the greedy routing fails,
//! so the oracle accepts every floorplan the search could reach and possibly more.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorplan::{Floorplan, UnitGraph};
use crate::model::{
    design_latency_with, fits_within, utilization_ratio, Configuration, ResourceVector,
};
use crate::packer::{check_legal, PackState};
use crate::pipeliner::RouteState;
use crate::problem::Problem;

pub const MAX_FUNCTIONS: usize = 12;
/// Refuse instances whose raw configuration-times-floorplan space exceeds this.
pub const MAX_SPACE: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

/// A configuration with a legal floorplan and routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub config: Configuration,
    pub floorplan: Floorplan,
    pub route: RouteState,
}

impl Witness {
    pub fn into_state(self) -> PackState {
        PackState {
            floorplan: self.floorplan,
            config: self.config,
            route: self.route,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub status: OracleStatus,
    /// Best latency found; optimal when `status` is `Optimal`.
    pub latency: Option<u64>,
    pub witness: Option<Witness>,
    pub nodes: u64,
}

/// Raw search space size: product of point counts times slots per group.
pub fn space_size(problem: &Problem) -> f64 {
    let qor = &problem.instance.qor;
    let configs: f64 = (0..problem.num_functions())
        .map(|f| qor.num_points(f) as f64)
        .product();
    configs * (problem.num_slots() as f64).powi(problem.groups.len() as i32)
}

fn guard(problem: &Problem) -> Result<()> {
    let n = problem.num_functions();
    if n > MAX_FUNCTIONS {
        return Err(Error::OverGuard(format!(
            "{n} functions, the oracle handles at most {MAX_FUNCTIONS}"
        )));
    }
    let space = space_size(problem);
    if space > MAX_SPACE {
        return Err(Error::OverGuard(format!(
            "search space {space:.3e} exceeds {MAX_SPACE:.0e}"
        )));
    }
    Ok(())
}

/// Outcome of a slot-assignment search for a fixed configuration.
#[derive(Debug, Clone)]
pub enum FloorplanSearch {
    Found(Floorplan, RouteState),
    NotFound,
    BudgetExceeded,
}

struct SlotSearch<'a> {
    problem: &'a Problem,
    config: &'a Configuration,
    graph: UnitGraph,
    order: Vec<usize>,
    limit: f64,
    budget: u64,
    nodes: u64,
    exceeded: bool,
    /// Minimize crossing FIFO width instead of stopping at the first legal floorplan.
    minimize_cut: bool,
    best_cut: u64,
    found: Option<(Vec<usize>, RouteState, bool)>,
}

impl SlotSearch<'_> {
    fn new<'a>(
        problem: &'a Problem,
        config: &'a Configuration,
        budget: u64,
        minimize_cut: bool,
    ) -> SlotSearch<'a> {
        let graph = UnitGraph::new(problem, config);
        let device = &problem.instance.device;
        let reference = device.total_capacity().scale_div(device.num_slots() as u64);
        let size = |g: usize| utilization_ratio(&graph.res[g], &reference).unwrap_or(f64::INFINITY);
        let mut order: Vec<usize> = (0..graph.res.len()).collect();
        order.sort_by(|&a, &b| {
            size(b)
                .partial_cmp(&size(a))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        SlotSearch {
            problem,
            config,
            graph,
            order,
            limit: problem.util_limit(),
            budget,
            nodes: 0,
            exceeded: false,
            minimize_cut,
            best_cut: u64::MAX,
            found: None,
        }
    }

    fn floorplan(&self, group_slot: &[usize]) -> Floorplan {
        let groups = &self.problem.groups;
        let assignment = (0..self.problem.num_functions())
            .map(|f| group_slot[groups.group_of(f)])
            .collect();
        Floorplan::new(self.problem, assignment, self.config)
    }

    /// Returns true to stop the search.
    fn leaf(&mut self, group_slot: &[usize], cut: u64) -> bool {
        let fp = self.floorplan(group_slot);
        if let Ok(route) = RouteState::recompute_all(self.problem, &fp) {
            self.found = Some((group_slot.to_vec(), route, true));
            self.best_cut = cut;
            return !self.minimize_cut;
        }
        if let Some(route) = RouteState::route_exhaustive(self.problem, &fp) {
            let better = match &self.found {
                None => true,
                Some((_, _, _)) => self.minimize_cut,
            };
            if better {
                self.found = Some((group_slot.to_vec(), route, false));
                self.best_cut = cut;
            }
        }
        false
    }

    fn dfs(
        &mut self,
        depth: usize,
        usage: &mut [ResourceVector],
        group_slot: &mut [usize],
        cut: u64,
    ) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exceeded = true;
            return true;
        }
        if self.minimize_cut && cut >= self.best_cut {
            return false;
        }
        if depth == self.order.len() {
            return self.leaf(group_slot, cut);
        }
        let g = self.order[depth];
        let device = &self.problem.instance.device;
        for s in 0..usage.len() {
            let next = usage[s] + self.graph.res[g];
            if !fits_within(&next, device.capacity(s), self.limit) {
                continue;
            }
            let added: u64 = self.graph.adj[g]
                .iter()
                .filter(|&&(h, _)| group_slot[h] != usize::MAX && group_slot[h] != s)
                .map(|&(_, w)| w)
                .sum();
            let prev = usage[s];
            usage[s] = next;
            group_slot[g] = s;
            let stop = self.dfs(depth + 1, usage, group_slot, cut + added);
            usage[s] = prev;
            group_slot[g] = usize::MAX;
            if stop {
                return true;
            }
        }
        false
    }

    fn run(mut self) -> (FloorplanSearch, u64) {
        let slots = self.problem.num_slots();
        let mut usage = vec![ResourceVector::ZERO; slots];
        let mut group_slot = vec![usize::MAX; self.graph.res.len()];
        self.dfs(0, &mut usage, &mut group_slot, 0);
        let nodes = self.nodes;
        let out = match self.found.take() {
            Some((gs, route, _)) if !self.exceeded || !self.minimize_cut => {
                FloorplanSearch::Found(self.floorplan(&gs), route)
            }
            _ if self.exceeded => FloorplanSearch::BudgetExceeded,
            _ => FloorplanSearch::NotFound,
        };
        (out, nodes)
    }
}

/// Decides whether `config` has a legal floorplan, exploring at most `budget`
/// nodes. Floorplans the greedy router accepts are preferred.
pub fn find_floorplan(
    problem: &Problem,
    config: &Configuration,
    budget: u64,
) -> (FloorplanSearch, u64) {
    if !aggregate_fits(problem, &config_total(problem, config)) {
        return (FloorplanSearch::NotFound, 1);
    }
    SlotSearch::new(problem, config, budget, false).run()
}

/// Exact minimum-cut legal slot assignment for `config`. Returns the best found so
/// far as `BudgetExceeded` when the node budget runs out.
pub fn min_cut_assignment(
    problem: &Problem,
    config: &Configuration,
    budget: u64,
) -> (FloorplanSearch, u64) {
    SlotSearch::new(problem, config, budget, true).run()
}

fn config_total(problem: &Problem, config: &Configuration) -> ResourceVector {
    (0..problem.num_functions())
        .map(|f| config.resources(&problem.instance.qor, f))
        .sum()
}

fn aggregate_fits(problem: &Problem, total: &ResourceVector) -> bool {
    let device = &problem.instance.device;
    let limit = problem.util_limit();
    let room: [f64; 5] = (0..device.num_slots()).fold([0.0; 5], |mut acc, s| {
        for (a, c) in acc.iter_mut().zip(device.capacity(s).to_array()) {
            *a += limit * c as f64;
        }
        acc
    });
    total
        .to_array()
        .iter()
        .zip(room)
        .all(|(&u, r)| u as f64 <= r + 1e-9)
}

/// Enumerates configurations (lexicographic in point index) whose design-latency
/// lower bound stays below `bound`, feeding each complete one to `visit`.
struct ConfigWalk<'a> {
    problem: &'a Problem,
    min_latency: Vec<u64>,
    min_res: Vec<ResourceVector>,
    chosen: Vec<usize>,
    nodes: u64,
}

impl<'a> ConfigWalk<'a> {
    fn new(problem: &'a Problem) -> Self {
        let qor = &problem.instance.qor;
        let n = problem.num_functions();
        let min_latency = (0..n).map(|f| qor.point(f, 0).latency).collect();
        let min_res = (0..n)
            .map(|f| {
                let mut m = [u64::MAX; 5];
                for p in qor.points(f) {
                    for (a, v) in m.iter_mut().zip(p.resources.to_array()) {
                        *a = (*a).min(v);
                    }
                }
                ResourceVector::from_array(m)
            })
            .collect();
        ConfigWalk {
            problem,
            min_latency,
            min_res,
            chosen: Vec::with_capacity(n),
            nodes: 0,
        }
    }

    fn lower_bound(&self) -> u64 {
        let qor = &self.problem.instance.qor;
        let k = self.chosen.len();
        design_latency_with(&self.problem.instance.design, |f| {
            if f < k {
                qor.point(f, self.chosen[f]).latency
            } else {
                self.min_latency[f]
            }
        })
    }

    fn partial_total(&self) -> ResourceVector {
        let qor = &self.problem.instance.qor;
        let k = self.chosen.len();
        (0..self.problem.num_functions())
            .map(|f| {
                if f < k {
                    qor.point(f, self.chosen[f]).resources
                } else {
                    self.min_res[f]
                }
            })
            .sum()
    }

    /// `bound` returns the current exclusive latency bound; `visit` returns false to stop.
    fn walk(
        &mut self,
        bound: &mut dyn FnMut() -> u64,
        visit: &mut dyn FnMut(&Configuration, u64) -> bool,
    ) -> bool {
        self.nodes += 1;
        let lb = self.lower_bound();
        if lb >= bound() || !aggregate_fits(self.problem, &self.partial_total()) {
            return true;
        }
        let n = self.problem.num_functions();
        if self.chosen.len() == n {
            return visit(&Configuration::new(self.chosen.clone()), lb);
        }
        let f = self.chosen.len();
        for p in 0..self.problem.instance.qor.num_points(f) {
            self.chosen.push(p);
            let go_on = self.walk(bound, visit);
            self.chosen.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Exact optimum over all configurations and floorplans, within `budget` nodes.
pub fn solve(problem: &Problem, budget: u64) -> Result<OracleResult> {
    guard(problem)?;
    let mut best: Option<(u64, Witness)> = None;
    let mut nodes = 0u64;
    let mut exceeded = false;
    let best_cell = std::cell::Cell::new(u64::MAX);
    {
        let mut walk = ConfigWalk::new(problem);
        let mut bound = || best_cell.get();
        let mut visit = |config: &Configuration, latency: u64| -> bool {
            let left = budget.saturating_sub(nodes);
            let (res, used) = find_floorplan(problem, config, left);
            nodes += used;
            match res {
                FloorplanSearch::Found(fp, route) => {
                    best_cell.set(latency);
                    best = Some((
                        latency,
                        Witness {
                            config: config.clone(),
                            floorplan: fp,
                            route,
                        },
                    ));
                }
                FloorplanSearch::BudgetExceeded => {
                    exceeded = true;
                    return false;
                }
                FloorplanSearch::NotFound => {}
            }
            if nodes >= budget {
                exceeded = true;
                return false;
            }
            true
        };
        walk.walk(&mut bound, &mut visit);
        nodes += walk.nodes;
    }
    let status = match (&best, exceeded) {
        (_, true) => OracleStatus::BudgetExceeded,
        (Some(_), false) => OracleStatus::Optimal,
        (None, false) => OracleStatus::Infeasible,
    };
    if let Some((_, w)) = &best {
        debug_assert!(check_legal(problem, &w.clone().into_state()).is_legal());
    }
    Ok(OracleResult {
        status,
        latency: best.as_ref().map(|(l, _)| *l),
        witness: best.map(|(_, w)| w),
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Optimal,
    Counterexample,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub verdict: VerdictKind,
    /// Latency of the checked result.
    pub latency: u64,
    /// Configurations with strictly lower design latency.
    pub better_configs: u64,
    /// How many of them were checked for a legal floorplan.
    pub checked: u64,
    /// Checked fraction whose floorplan question was settled.
    pub coverage: f64,
    pub counterexample: Option<(u64, Witness)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Check at most this many better configurations, sampled uniformly.
    pub sample: usize,
    pub seed: u64,
    /// Node budget per floorplan search.
    pub budget: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sample: 2000,
            seed: 0,
            budget: 1_000_000,
        }
    }
}

/// Checks that no configuration faster than `config` admits a legal floorplan.
pub fn verify_optimal(
    problem: &Problem,
    config: &Configuration,
    opts: &VerifyOptions,
) -> Result<Verdict> {
    guard(problem)?;
    let qor = &problem.instance.qor;
    let design = &problem.instance.design;
    let target = design_latency_with(design, |f| config.latency(qor, f));

    // Reservoir sample of the better configurations.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reservoir: Vec<(Configuration, u64)> = Vec::new();
    let mut seen = 0u64;
    {
        let mut walk = ConfigWalk::new(problem);
        let mut bound = || target;
        let mut visit = |c: &Configuration, lat: u64| -> bool {
            seen += 1;
            if reservoir.len() < opts.sample {
                reservoir.push((c.clone(), lat));
            } else {
                let j = rng.gen_range(0..seen);
                if (j as usize) < opts.sample {
                    reservoir[j as usize] = (c.clone(), lat);
                }
            }
            true
        };
        walk.walk(&mut bound, &mut visit);
    }
    reservoir.sort_by(|a, b| a.0.cmp(&b.0));

    let mut checked = 0u64;
    let mut undecided = 0u64;
    for (c, lat) in reservoir {
        checked += 1;
        match find_floorplan(problem, &c, opts.budget).0 {
            FloorplanSearch::Found(floorplan, route) => {
                return Ok(Verdict {
                    verdict: VerdictKind::Counterexample,
                    latency: target,
                    better_configs: seen,
                    checked,
                    coverage: (checked - undecided) as f64 / seen.max(1) as f64,
                    counterexample: Some((
                        lat,
                        Witness {
                            config: c,
                            floorplan,
                            route,
                        },
                    )),
                });
            }
            FloorplanSearch::BudgetExceeded => undecided += 1,
            FloorplanSearch::NotFound => {}
        }
    }
    Ok(Verdict {
        verdict: if undecided > 0 {
            VerdictKind::Inconclusive
        } else {
            VerdictKind::Optimal
        },
        latency: target,
        better_configs: seen,
        checked,
        coverage: if seen == 0 {
            1.0
        } else {
            (checked - undecided) as f64 / seen as f64
        },
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instancegen::InstanceBuilder;
    use crate::model::{design_latency, DeviceModel};

    fn lut(n: u64) -> ResourceVector {
        ResourceVector::new(0, 0, 0, n, 0)
    }

    fn device(width: usize, limit: f64) -> DeviceModel {
        let mut d = DeviceModel::uniform("o", width, 1, lut(100), 1000);
        d.util_limit = limit;
        d
    }

    #[test]
    fn single_point_is_its_own_optimum() {
        let inst = InstanceBuilder::new(device(2, 0.7))
            .dataflow("K", &["a"])
            .lut_points("a", &[(9, 50)])
            .build()
            .unwrap();
        let p = Problem::new(inst);
        let r = solve(&p, 10_000).unwrap();
        assert_eq!((r.status, r.latency), (OracleStatus::Optimal, Some(9)));
    }

    fn naive(p: &Problem) -> Option<u64> {
        let qor = &p.instance.qor;
        let n = p.num_functions();
        let s = p.num_slots();
        let mut best = None;
        let total_cfg: usize = (0..n).map(|f| qor.num_points(f)).product();
        for code in 0..total_cfg {
            let mut c = code;
            let chosen: Vec<usize> = (0..n)
                .map(|f| {
                    let k = qor.num_points(f);
                    let v = c % k;
                    c /= k;
                    v
                })
                .collect();
            let config = Configuration::new(chosen);
            let lat = design_latency(&p.instance.design, &config, qor).unwrap();
            if best.is_some_and(|b| lat >= b) {
                continue;
            }
            for a in 0..s.pow(n as u32) {
                let mut x = a;
                let assign: Vec<usize> = (0..n)
                    .map(|_| {
                        let v = x % s;
                        x /= s;
                        v
                    })
                    .collect();
                let fp = Floorplan::new(p, assign, &config);
                let Some(route) = RouteState::route_exhaustive(p, &fp) else {
                    continue;
                };
                let st = PackState {
                    floorplan: fp,
                    config: config.clone(),
                    route,
                };
                if check_legal(p, &st).is_legal() {
                    best = Some(lat);
                    break;
                }
            }
        }
        best
    }

    #[test]
    fn matches_naive_enumeration() {
        for seed in 0..25u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = InstanceBuilder::new(device(2, 0.7))
                .dataflow("K1", &["a", "b"])
                .dataflow("K2", &["c", "d"])
                .fifo("a", "c", 8);
            if rng.gen_bool(0.5) {
                b = b.ram("a", "b");
            }
            for f in ["a", "b", "c", "d"] {
                let pts: Vec<(u64, u64)> = (0..3)
                    .map(|_| (rng.gen_range(1..20), rng.gen_range(5..60)))
                    .collect();
                b = b.lut_points(f, &pts);
            }
            let p = Problem::new(b.build().unwrap());
            let r = solve(&p, 10_000_000).unwrap();
            assert_eq!(r.latency, naive(&p), "seed {seed}");
            if let Some(w) = r.witness {
                assert!(check_legal(&p, &w.into_state()).is_legal());
            }
        }
    }

    #[test]
    fn refuses_large_instances() {
        let names: Vec<String> = (0..13).map(|i| format!("f{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut b = InstanceBuilder::new(device(2, 0.7)).dataflow("K", &refs);
        for n in &names {
            b = b.lut_points(n, &[(1, 1)]);
        }
        let p = Problem::new(b.build().unwrap());
        assert!(matches!(solve(&p, 100), Err(Error::OverGuard(_))));
    }

    #[test]
    fn truncated_result_gets_a_counterexample() {
        let inst = InstanceBuilder::new(device(2, 0.7))
            .dataflow("K", &["a", "b"])
            .lut_points("a", &[(10, 20), (5, 40)])
            .lut_points("b", &[(8, 20), (4, 40)])
            .build()
            .unwrap();
        let p = Problem::new(inst);
        let base = Configuration::baseline(&p.instance.qor);
        let v = verify_optimal(&p, &base, &VerifyOptions::default()).unwrap();
        assert_eq!(v.verdict, VerdictKind::Counterexample);
        let (lat, w) = v.counterexample.unwrap();
        assert!(lat < 10);
        assert!(check_legal(&p, &w.into_state()).is_legal());

        let best = solve(&p, 100_000).unwrap().witness.unwrap().config;
        let v = verify_optimal(&p, &best, &VerifyOptions::default()).unwrap();
        assert_eq!(v.verdict, VerdictKind::Optimal);
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let inst = InstanceBuilder::new(device(2, 0.7))
            .dataflow("K", &["a", "b", "c"])
            .lut_points("a", &[(10, 20), (5, 60)])
            .lut_points("b", &[(8, 20), (4, 60)])
            .lut_points("c", &[(8, 20), (4, 60)])
            .build()
            .unwrap();
        let p = Problem::new(inst);
        let base = Configuration::baseline(&p.instance.qor);
        let opts = VerifyOptions {
            budget: 1,
            ..VerifyOptions::default()
        };
        let v = verify_optimal(&p, &base, &opts).unwrap();
        assert_eq!(v.verdict, VerdictKind::Inconclusive);
        assert!(v.coverage < 1.0);
    }

    #[test]
    fn min_cut_assignment_is_exact() {
        let inst = InstanceBuilder::new(device(2, 0.7))
            .dataflow("K", &["a", "b", "c", "d"])
            .fifo("a", "b", 16)
            .fifo("c", "d", 8)
            .fifo("b", "c", 4)
            .lut_points("a", &[(1, 30)])
            .lut_points("b", &[(1, 30)])
            .lut_points("c", &[(1, 30)])
            .lut_points("d", &[(1, 30)])
            .build()
            .unwrap();
        let p = Problem::new(inst);
        let c = Configuration::baseline(&p.instance.qor);
        let FloorplanSearch::Found(fp, _) = min_cut_assignment(&p, &c, 1_000_000).0 else {
            panic!("feasible")
        };
        assert_eq!(fp.slot_of(0), fp.slot_of(1));
        assert_eq!(fp.slot_of(2), fp.slot_of(3));
        assert_ne!(fp.slot_of(1), fp.slot_of(2));
    }
}
