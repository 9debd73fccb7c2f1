//! Floorplan legality and repair: online worst-fit packing of new directive
//! points and offline best-fit-decreasing re-packing.

mod legality;
mod offline;
mod online;

pub use legality::{check_legal, LegalityReport, Violation};
pub use offline::offline_repack;
pub use online::{online_pack, PackOutcome};

use serde::Serialize;

use crate::error::Result;
use crate::floorplan::Floorplan;
use crate::model::{Configuration, Resource, ResourceVector};
use crate::pipeliner::{RouteDelta, RouteState};
use crate::problem::Problem;

/// Current configuration, floorplan and routing of a design.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackState {
    pub floorplan: Floorplan,
    pub config: Configuration,
    pub route: RouteState,
}

impl PackState {
    /// Builds a state with canonical routing. Fails if the SLL budget cannot be met.
    pub fn new(problem: &Problem, floorplan: Floorplan, config: Configuration) -> Result<Self> {
        let route = RouteState::recompute_all(problem, &floorplan)?;
        Ok(PackState {
            floorplan,
            config,
            route,
        })
    }

    /// Moves a whole RAM group to `to` and re-routes its FIFO edges. On an SLL
    /// admission failure nothing changes and `None` is returned.
    pub(crate) fn try_move_group(
        &mut self,
        problem: &Problem,
        group: usize,
        to: usize,
    ) -> Option<(Vec<Move>, RouteDelta)> {
        let qor = &problem.instance.qor;
        let members = problem.groups.members(group);
        let from = self.floorplan.slot_of(members[0]);
        for &m in members {
            self.floorplan
                .relocate(m, to, self.config.resources(qor, m));
        }
        match self
            .route
            .incremental_update(problem, &self.floorplan, members)
        {
            Ok(delta) => Some((
                members
                    .iter()
                    .map(|&m| Move {
                        function: m,
                        from,
                        to,
                    })
                    .collect(),
                delta,
            )),
            Err(_) => {
                for &m in members {
                    self.floorplan
                        .relocate(m, from, self.config.resources(qor, m));
                }
                None
            }
        }
    }

    /// Sum of the group's resources under the current configuration.
    pub(crate) fn group_resources(&self, problem: &Problem, group: usize) -> ResourceVector {
        problem
            .groups
            .members(group)
            .iter()
            .map(|&f| self.config.resources(&problem.instance.qor, f))
            .sum()
    }
}

/// A function relocated between slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Move {
    pub function: usize,
    pub from: usize,
    pub to: usize,
}

/// Hypothetical post-add ratios of `slot` with `candidate` added. Resources with
/// zero capacity and nonzero demand are infinitely overflowed.
pub fn post_add_ratios(
    problem: &Problem,
    usage: &ResourceVector,
    slot: usize,
    candidate: &ResourceVector,
) -> [f64; 5] {
    let cap = problem.instance.device.capacity(slot);
    let total = *usage + *candidate;
    Resource::ALL.map(|r| match (total.get(r), cap.get(r)) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (u, c) => u as f64 / c as f64,
    })
}

/// The critical resource of `slot` after hypothetically adding `candidate`:
/// the resource with the largest ratio (first in BRAM, DSP, FF, LUT, URAM order on ties).
pub fn critical_resource(
    problem: &Problem,
    floorplan: &Floorplan,
    slot: usize,
    candidate: &ResourceVector,
) -> (Resource, f64) {
    let ratios = post_add_ratios(problem, floorplan.usage(slot), slot, candidate);
    let mut best = (Resource::Bram, ratios[0]);
    for (i, r) in Resource::ALL.iter().enumerate().skip(1) {
        if ratios[i] > best.1 {
            best = (*r, ratios[i]);
        }
    }
    best
}
