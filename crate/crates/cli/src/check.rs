//! Replays legality, SLL conservation and canonical routing on an emitted result.

use fado::model::design_latency;
use fado::packer::{check_legal, Violation};
use fado::pipeliner::{CrossingKind, RouteState};
use fado::Problem;
use serde::Serialize;

use crate::report::ResultFile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub constraint: &'static str,
    pub detail: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.constraint, self.detail)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, constraint: &'static str, detail: String) {
        self.findings.push(Finding { constraint, detail });
    }
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::Unassigned { function, slot } => {
            format!("`{function}` assigned to missing slot {slot}")
        }
        Violation::Capacity {
            slot,
            resource,
            used,
            limit,
            overflow,
        } => format!("slot {slot} uses {used} {resource}, limit {limit:.1}, over by {overflow:.1}"),
        Violation::SplitGroup { group, slots } => {
            format!("RAM group {{{}}} spans slots {slots:?}", group.join(", "))
        }
        Violation::Sll {
            boundary,
            half,
            used,
            budget,
        } => format!("die boundary {boundary} half {half} uses {used} SLLs, budget {budget:.1}"),
        Violation::UsageMismatch { slot } => {
            format!("slot {slot} usage does not match its functions")
        }
    }
}

/// Checks `result` against `problem`. Schema-level problems (unknown functions or
/// points) are returned as errors; everything else becomes a finding.
pub fn check_result(problem: &Problem, result: &ResultFile) -> fado::Result<CheckReport> {
    let mut report = CheckReport::default();
    let design = &problem.instance.design;
    let device = &problem.instance.device;
    let route = &result.route;

    let rows = device.height.saturating_sub(1);
    let table = route.sll_table();
    if route.num_edges() != design.edges.len()
        || table.len() != rows
        || table.iter().any(|r| r.len() != device.width)
    {
        report.push(
            "route-shape",
            format!(
                "route covers {} edges and a {}-row SLL table; design has {} edges and {} die boundaries",
                route.num_edges(),
                table.len(),
                design.edges.len(),
                rows
            ),
        );
        return Ok(report);
    }

    let state = result.state(problem)?;
    for v in check_legal(problem, &state).violations {
        report.push(v.label(), describe(&v));
    }
    if report.findings.iter().any(|f| f.constraint == "assignment") {
        return Ok(report);
    }

    // Stored SLL usage must equal the summed width of the stored die crossings.
    let mut expect = vec![vec![0u64; device.width]; rows];
    for (i, e) in design.edges.iter().enumerate() {
        for c in route
            .route(i)
            .iter()
            .filter(|c| c.kind == CrossingKind::Die)
        {
            match expect.get_mut(c.boundary).and_then(|r| r.get_mut(c.half)) {
                Some(cell) => *cell += e.width,
                None => report.push(
                    "sll-conservation",
                    format!(
                        "edge {i} crosses missing die boundary {} half {}",
                        c.boundary, c.half
                    ),
                ),
            }
        }
    }
    for (b, row) in expect.iter().enumerate() {
        for (h, &want) in row.iter().enumerate() {
            if table[b][h] != want {
                report.push(
                    "sll-conservation",
                    format!(
                        "die boundary {b} half {h}: table says {}, crossings sum to {want}",
                        table[b][h]
                    ),
                );
            }
        }
    }

    match RouteState::recompute_all(problem, &state.floorplan) {
        Ok(fresh) if fresh != *route => {
            let edges: Vec<usize> = (0..design.edges.len())
                .filter(|&i| fresh.route(i) != route.route(i))
                .collect();
            let cells = if fresh.sll_table() != table {
                ", SLL table differs"
            } else {
                ""
            };
            report.push(
                "routing",
                format!("stored routes differ from a full recompute on edges {edges:?}{cells}"),
            );
        }
        Ok(_) => {}
        Err(e) => report.push("routing", format!("full recompute fails: {e}")),
    }

    if let Ok(lat) = design_latency(design, &state.config, &problem.instance.qor) {
        if lat != result.design_latency {
            report.push(
                "latency",
                format!(
                    "stored design latency {}, recomputed {lat}",
                    result.design_latency
                ),
            );
        }
    }
    Ok(report)
}
