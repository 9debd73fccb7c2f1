//! Function-to-slot assignment and the two booting floorplanners.

mod balanced;
mod groups;
mod mincut;

pub use balanced::balanced_initial;
pub use groups::{build_ram_groups, RamGroups};
pub(crate) use mincut::UnitGraph;
pub use mincut::{min_cut_initial, min_cut_initial_at, Bisection, CutReport};

use crate::model::{utilization_ratio, Configuration, ResourceVector};
use crate::problem::Problem;

/// Slot of every function plus the derived per-slot resource usage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Floorplan {
    assignment: Vec<usize>,
    usage: Vec<ResourceVector>,
}

impl Floorplan {
    pub fn new(problem: &Problem, assignment: Vec<usize>, config: &Configuration) -> Self {
        let qor = &problem.instance.qor;
        let mut usage = vec![ResourceVector::ZERO; problem.num_slots()];
        for (f, &s) in assignment.iter().enumerate() {
            usage[s] += config.resources(qor, f);
        }
        Floorplan { assignment, usage }
    }

    pub fn slot_of(&self, f: usize) -> usize {
        self.assignment[f]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn usage(&self, slot: usize) -> &ResourceVector {
        &self.usage[slot]
    }

    pub fn usages(&self) -> &[ResourceVector] {
        &self.usage
    }

    pub fn num_slots(&self) -> usize {
        self.usage.len()
    }

    pub fn functions_on(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == slot)
            .map(|(f, _)| f)
    }

    pub fn is_empty_slot(&self, slot: usize) -> bool {
        !self.assignment.contains(&slot)
    }

    /// Utilization (max normalized resource ratio) of a slot.
    pub fn utilization(&self, problem: &Problem, slot: usize) -> f64 {
        utilization_ratio(&self.usage[slot], problem.instance.device.capacity(slot))
            .unwrap_or(f64::INFINITY)
    }

    pub fn max_utilization(&self, problem: &Problem) -> f64 {
        (0..self.usage.len())
            .map(|s| self.utilization(problem, s))
            .fold(0.0, f64::max)
    }

    pub(crate) fn relocate(&mut self, f: usize, to: usize, res: ResourceVector) {
        let from = self.assignment[f];
        self.usage[from] = self.usage[from].sub_unchecked(&res);
        self.usage[to] += res;
        self.assignment[f] = to;
    }

    pub(crate) fn swap_resources(&mut self, f: usize, old: ResourceVector, new: ResourceVector) {
        let s = self.assignment[f];
        self.usage[s] = self.usage[s].sub_unchecked(&old) + new;
    }
}
