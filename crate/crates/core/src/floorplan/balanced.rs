//! Resource-balancing booting floorplan: the largest group goes to the least
//! utilized slot that still takes it.

use std::cmp::Ordering;

use super::mincut::{check_packable, UnitGraph};
use super::Floorplan;
use crate::error::{Error, Result};
use crate::model::{fits_within, utilization_ratio, Configuration, ResourceVector};
use crate::problem::Problem;

fn balanced_at(problem: &Problem, config: &Configuration, limit: f64) -> Result<Floorplan> {
    let device = &problem.instance.device;
    let res = UnitGraph::new(problem, config).res;
    for (g, r) in res.iter().enumerate() {
        if !(0..device.num_slots()).any(|s| fits_within(r, device.capacity(s), limit)) {
            // Reuse the diagnostic that names the group.
            check_packable(problem, &res, limit)?;
            return Err(Error::Infeasible(format!("group {g} fits in no slot")));
        }
    }
    let reference = device.total_capacity().scale_div(device.num_slots() as u64);
    let size = |g: usize| utilization_ratio(&res[g], &reference).unwrap_or(f64::INFINITY);
    let mut order: Vec<usize> = (0..res.len()).collect();
    order.sort_by(|&a, &b| {
        size(b)
            .partial_cmp(&size(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut usage = vec![ResourceVector::ZERO; device.num_slots()];
    let mut group_slot = vec![0usize; res.len()];
    for g in order {
        let slot = (0..usage.len())
            .filter(|&s| fits_within(&(usage[s] + res[g]), device.capacity(s), limit))
            .min_by(|&a, &b| {
                let ua = utilization_ratio(&usage[a], device.capacity(a)).unwrap_or(f64::INFINITY);
                let ub = utilization_ratio(&usage[b], device.capacity(b)).unwrap_or(f64::INFINITY);
                ua.partial_cmp(&ub)
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            })
            .ok_or_else(|| {
                let names: Vec<&str> = problem
                    .groups
                    .members(g)
                    .iter()
                    .map(|&f| problem.instance.design.function_name(f))
                    .collect();
                Error::Infeasible(format!("balanced booting cannot place group {names:?}"))
            })?;
        usage[slot] += res[g];
        group_slot[g] = slot;
    }
    let assignment = (0..problem.num_functions())
        .map(|f| group_slot[problem.groups.group_of(f)])
        .collect();
    Ok(Floorplan::new(problem, assignment, config))
}

/// Balanced booting floorplan at the device's utilization limit, retrying once at
/// 100% before giving up.
pub fn balanced_initial(problem: &Problem, config: &Configuration) -> Result<Floorplan> {
    let limit = problem.util_limit();
    match balanced_at(problem, config, limit) {
        Ok(fp) => Ok(fp),
        Err(Error::Infeasible(msg)) if limit < 1.0 => {
            log::warn!("balanced booting infeasible at {limit}: {msg}; retrying at 1.0");
            balanced_at(problem, config, 1.0)
        }
        Err(e) => Err(e),
    }
}
