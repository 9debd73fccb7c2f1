use crate::floorplan::{build_ram_groups, RamGroups};
use crate::model::{EdgeKind, Instance};

/// A loaded instance plus the static structure every algorithm needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub groups: RamGroups,
    /// FIFO edges incident to each function.
    incident_fifo: Vec<Vec<usize>>,
}

impl Problem {
    pub fn new(instance: Instance) -> Self {
        let groups = build_ram_groups(&instance.design);
        let mut incident_fifo = vec![Vec::new(); instance.design.num_functions()];
        for (i, e) in instance.design.edges.iter().enumerate() {
            if e.kind == EdgeKind::Fifo {
                incident_fifo[e.src].push(i);
                if e.dst != e.src {
                    incident_fifo[e.dst].push(i);
                }
            }
        }
        Problem {
            instance,
            groups,
            incident_fifo,
        }
    }

    pub fn incident_fifo(&self, f: usize) -> &[usize] {
        &self.incident_fifo[f]
    }

    pub fn num_functions(&self) -> usize {
        self.instance.design.num_functions()
    }

    pub fn num_slots(&self) -> usize {
        self.instance.device.num_slots()
    }

    pub fn util_limit(&self) -> f64 {
        self.instance.device.util_limit
    }
}
