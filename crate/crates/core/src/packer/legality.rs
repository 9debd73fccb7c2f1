use serde::Serialize;

use super::PackState;
use crate::model::{fits_within, EdgeKind, Resource, ResourceVector};
use crate::problem::Problem;

/// One violated floorplan constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    /// A function is assigned to a slot that does not exist.
    Unassigned { function: String, slot: usize },
    /// Slot usage above `util_limit * capacity` for one resource.
    Capacity {
        slot: usize,
        resource: Resource,
        used: u64,
        limit: f64,
        overflow: f64,
    },
    /// A RAM group spread over several slots.
    SplitGroup {
        group: Vec<String>,
        slots: Vec<usize>,
    },
    /// Die-boundary half with SLL usage above `beta * B_h`.
    Sll {
        boundary: usize,
        half: usize,
        used: u64,
        budget: f64,
    },
    /// Stored usage does not match the functions on the slot.
    UsageMismatch { slot: usize },
}

impl Violation {
    /// The constraint family this violation belongs to.
    pub fn label(&self) -> &'static str {
        match self {
            Violation::Unassigned { .. } => "assignment",
            Violation::Capacity { .. } => "capacity",
            Violation::SplitGroup { .. } => "ram-grouping",
            Violation::Sll { .. } => "sll-budget",
            Violation::UsageMismatch { .. } => "usage-consistency",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LegalityReport {
    pub violations: Vec<Violation>,
}

impl LegalityReport {
    pub fn is_legal(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every capacity, grouping and SLL violation of `state`. Empty iff legal.
pub fn check_legal(problem: &Problem, state: &PackState) -> LegalityReport {
    let device = &problem.instance.device;
    let design = &problem.instance.design;
    let qor = &problem.instance.qor;
    let fp = &state.floorplan;
    let mut violations = Vec::new();

    let slots = device.num_slots();
    for (f, &s) in fp.assignment().iter().enumerate() {
        if s >= slots {
            violations.push(Violation::Unassigned {
                function: design.function_name(f).to_string(),
                slot: s,
            });
        }
    }
    if !violations.is_empty() {
        return LegalityReport { violations };
    }

    let mut recomputed = vec![ResourceVector::ZERO; slots];
    for f in 0..design.num_functions() {
        recomputed[fp.slot_of(f)] += state.config.resources(qor, f);
    }
    for s in 0..slots {
        if recomputed[s] != *fp.usage(s) {
            violations.push(Violation::UsageMismatch { slot: s });
        }
        let cap = device.capacity(s);
        if fits_within(&recomputed[s], cap, device.util_limit) {
            continue;
        }
        for r in Resource::ALL {
            let used = recomputed[s].get(r);
            let limit = device.util_limit * cap.get(r) as f64;
            if used > 0 && used as f64 > limit + 1e-9 {
                violations.push(Violation::Capacity {
                    slot: s,
                    resource: r,
                    used,
                    limit,
                    overflow: used as f64 - limit,
                });
            }
        }
    }

    let groups = &problem.groups;
    for g in 0..groups.len() {
        let members = groups.members(g);
        let mut used: Vec<usize> = members.iter().map(|&f| fp.slot_of(f)).collect();
        used.sort_unstable();
        used.dedup();
        if used.len() > 1 {
            violations.push(Violation::SplitGroup {
                group: members
                    .iter()
                    .map(|&f| design.function_name(f).to_string())
                    .collect(),
                slots: used,
            });
        }
    }
    debug_assert!(design
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Ram)
        .all(|e| groups.group_of(e.src) == groups.group_of(e.dst)));

    for o in state.route.overflows(device) {
        violations.push(Violation::Sll {
            boundary: o.boundary,
            half: o.half,
            used: o.used,
            budget: o.budget,
        });
    }
    LegalityReport { violations }
}
