use std::cmp::Ordering;

use serde::Serialize;

use super::{post_add_ratios, Move, PackState};
use crate::error::{Error, Result};
use crate::model::{fits_within, utilization_ratio, ResourceVector};
use crate::pipeliner::RouteDelta;
use crate::problem::Problem;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PackOutcome {
    pub fit: bool,
    pub moves: Vec<Move>,
    #[serde(skip)]
    pub route_delta: Vec<RouteDelta>,
}

enum Op {
    SetPoint {
        function: usize,
        old_point: usize,
        old_res: ResourceVector,
        new_res: ResourceVector,
    },
    MoveGroup {
        group: usize,
        from: usize,
        route: RouteDelta,
    },
}

/// Candidate destination for a group, ordered by post-add critical ratio, then the
/// mean of the other four ratios, then slot id.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    slot: usize,
    cr: f64,
    rest: f64,
    feasible: bool,
}

fn rank_slots(
    problem: &Problem,
    state: &PackState,
    demand: &ResourceVector,
    exclude: usize,
) -> Vec<Candidate> {
    let limit = problem.util_limit();
    let mut out: Vec<Candidate> = (0..problem.num_slots())
        .filter(|&s| s != exclude)
        .map(|s| {
            let usage = state.floorplan.usage(s);
            let ratios = post_add_ratios(problem, usage, s, demand);
            let (ci, cr) = ratios
                .iter()
                .enumerate()
                .fold(
                    (0, ratios[0]),
                    |best, (i, &r)| if r > best.1 { (i, r) } else { best },
                );
            let rest = ratios
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != ci)
                .map(|(_, r)| *r)
                .sum::<f64>()
                / 4.0;
            Candidate {
                slot: s,
                cr,
                rest,
                feasible: fits_within(
                    &(*usage + *demand),
                    problem.instance.device.capacity(s),
                    limit,
                ),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.cr.partial_cmp(&b.cr)
            .unwrap_or(Ordering::Equal)
            .then(a.rest.partial_cmp(&b.rest).unwrap_or(Ordering::Equal))
            .then(a.slot.cmp(&b.slot))
    });
    out
}

/// Applies the target points of `batch` one function at a time, keeping each in
/// its slot when it still fits and otherwise moving its RAM group to the
/// feasible slot with the lowest critical-resource ratio. All-or-nothing: if any
/// function fits nowhere the state is restored and `fit` is false.
pub fn online_pack(
    problem: &Problem,
    state: &mut PackState,
    targets: &[(usize, usize)],
) -> Result<PackOutcome> {
    let qor = &problem.instance.qor;
    let device = &problem.instance.device;
    let limit = problem.util_limit();
    for &(f, p) in targets {
        if f >= problem.num_functions() {
            return Err(Error::UnknownFunction(format!("#{f}")));
        }
        if p >= qor.num_points(f) {
            return Err(Error::UnknownPoint {
                template: qor.template_name(f).to_string(),
                point: format!("#{p}"),
            });
        }
    }

    // Hardest fits first.
    let mut order: Vec<(usize, usize, f64)> = targets
        .iter()
        .map(|&(f, p)| {
            let cap = device.capacity(state.floorplan.slot_of(f));
            let u = utilization_ratio(&qor.point(f, p).resources, cap).unwrap_or(f64::INFINITY);
            (f, p, u)
        })
        .collect();
    order.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });

    let mut log: Vec<Op> = Vec::new();
    let mut moves = Vec::new();
    let mut ok = true;
    for (f, p, _) in order {
        let old_point = state.config.get(f);
        let old_res = state.config.resources(qor, f);
        let new_res = qor.point(f, p).resources;
        state.config.set(f, p);
        state.floorplan.swap_resources(f, old_res, new_res);
        log.push(Op::SetPoint {
            function: f,
            old_point,
            old_res,
            new_res,
        });
        let here = state.floorplan.slot_of(f);
        if fits_within(state.floorplan.usage(here), device.capacity(here), limit) {
            continue;
        }

        let group = problem.groups.group_of(f);
        let demand = state.group_resources(problem, group);
        let mut placed = false;
        for c in rank_slots(problem, state, &demand, here) {
            if !c.feasible {
                continue;
            }
            if let Some((mv, route)) = state.try_move_group(problem, group, c.slot) {
                moves.extend(mv);
                log.push(Op::MoveGroup {
                    group,
                    from: here,
                    route,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            ok = false;
            break;
        }
    }

    if !ok {
        for op in log.into_iter().rev() {
            match op {
                Op::SetPoint {
                    function,
                    old_point,
                    old_res,
                    new_res,
                } => {
                    state.config.set(function, old_point);
                    state.floorplan.swap_resources(function, new_res, old_res);
                }
                Op::MoveGroup { group, from, route } => {
                    state.route.revert(route);
                    for &m in problem.groups.members(group) {
                        state
                            .floorplan
                            .relocate(m, from, state.config.resources(qor, m));
                    }
                }
            }
        }
        return Ok(PackOutcome::default());
    }

    let route_delta = log
        .into_iter()
        .filter_map(|op| match op {
            Op::MoveGroup { route, .. } => Some(route),
            Op::SetPoint { .. } => None,
        })
        .collect();
    Ok(PackOutcome {
        fit: true,
        moves,
        route_delta,
    })
}
