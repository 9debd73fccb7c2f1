use std::cmp::Ordering;

use super::{Move, PackState};
use crate::model::{fits_within, utilization_ratio};
use crate::problem::Problem;

/// Movable (non-pinned) RAM groups on `slot`, largest first.
fn units_on(problem: &Problem, state: &PackState, slot: usize) -> Vec<usize> {
    let cap = problem.instance.device.capacity(slot);
    let mut units: Vec<(usize, f64)> = (0..problem.groups.len())
        .filter(|&g| !problem.groups.is_pinned(g))
        .filter(|&g| state.floorplan.slot_of(problem.groups.members(g)[0]) == slot)
        .map(|g| {
            let u =
                utilization_ratio(&state.group_resources(problem, g), cap).unwrap_or(f64::INFINITY);
            (g, u)
        })
        .collect();
    units.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    units.into_iter().map(|(g, _)| g).collect()
}

/// Slots by utilization, fullest first (ties by id).
fn by_fullness(problem: &Problem, state: &PackState) -> Vec<usize> {
    let mut slots: Vec<(usize, f64)> = (0..problem.num_slots())
        .map(|s| (s, state.floorplan.utilization(problem, s)))
        .collect();
    slots.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    slots.into_iter().map(|(s, _)| s).collect()
}

fn try_place(
    problem: &Problem,
    state: &mut PackState,
    group: usize,
    to: usize,
) -> Option<Vec<Move>> {
    let demand = state.group_resources(problem, group);
    let usage = *state.floorplan.usage(to) + demand;
    if !fits_within(
        &usage,
        problem.instance.device.capacity(to),
        problem.util_limit(),
    ) {
        return None;
    }
    state.try_move_group(problem, group, to).map(|(mv, _)| mv)
}

/// Compacts the floorplan without touching the configuration, to make room for
/// the functions in `focus`.
///
/// For each pinned (non-dataflow) group among `focus`, the dataflow groups sharing
/// its slot are first pushed to the least-utilized slot that takes them; such a
/// slot then receives nothing. Next the slots are sorted fullest first and, for the
/// m-th fullest slot, its groups (largest first) are moved into the 1st..(m-1)-th
/// fullest slots in turn wherever they fit. A trial whose source or destination
/// slot is empty is skipped. Pinned groups never move.
pub fn offline_repack(problem: &Problem, state: &mut PackState, focus: &[usize]) -> Vec<Move> {
    let mut moves = Vec::new();
    let slots = problem.num_slots();
    if slots < 2 {
        return moves;
    }

    let mut relieved: Vec<usize> = focus
        .iter()
        .map(|&f| problem.groups.group_of(f))
        .filter(|&g| problem.groups.is_pinned(g))
        .map(|g| state.floorplan.slot_of(problem.groups.members(g)[0]))
        .collect();
    relieved.sort_unstable();
    relieved.dedup();
    for &slot in &relieved {
        for g in units_on(problem, state, slot) {
            let mut dests: Vec<(usize, f64)> = (0..slots)
                .filter(|s| !relieved.contains(s))
                .map(|s| (s, state.floorplan.utilization(problem, s)))
                .collect();
            dests.sort_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap_or(Ordering::Equal)
                    .then(a.0.cmp(&b.0))
            });
            for (d, _) in dests {
                if let Some(mv) = try_place(problem, state, g, d) {
                    moves.extend(mv);
                    break;
                }
            }
        }
    }

    let order = by_fullness(problem, state);
    for m in 1..slots {
        for d in 0..m {
            let (src, dst) = (order[m], order[d]);
            if state.floorplan.is_empty_slot(src)
                || state.floorplan.is_empty_slot(dst)
                || relieved.contains(&dst)
            {
                continue;
            }
            for g in units_on(problem, state, src) {
                if let Some(mv) = try_place(problem, state, g, dst) {
                    moves.extend(mv);
                }
            }
        }
    }
    moves
}
