//! Domain types and ingestion: device, design graph, QoR library, configuration,
//! utilization math and the latency objective.

mod config;
mod design;
mod device;
mod latency;
mod qor;
mod resources;

pub use config::Configuration;
pub use design::{
    DesignFile, DesignGraph, Edge, EdgeKind, EdgeSpec, Function, FunctionSpec, Kernel, KernelKind,
    KernelSpec,
};
pub use device::{
    BoundaryHalf, DeviceModel, DieBoundary, IoBoundary, Slot, DEFAULT_SLL_LIMIT, DEFAULT_UTIL_LIMIT,
};
pub use latency::{design_latency, design_latency_with, kernel_latencies, longest_path};
pub use qor::{LoopInfo, NameRule, QoRLibrary, QoRPoint, QorFile, Template, BASELINE_ID};
pub use resources::{fits_within, resource_ratios, utilization_ratio, Resource, ResourceVector};

/// Everything a run needs, loaded and validated together.
#[derive(Debug, Clone)]
pub struct Instance {
    pub device: DeviceModel,
    pub design: DesignGraph,
    pub qor: QoRLibrary,
}

impl Instance {
    pub fn new(device: DeviceModel, design: DesignGraph, qor: QoRLibrary) -> Self {
        Instance {
            device,
            design,
            qor,
        }
    }

    pub fn from_json(device: &str, design: &str, qor: &str) -> crate::Result<Self> {
        let device = DeviceModel::from_json(device)?;
        let design = DesignGraph::from_json(design)?;
        let qor = QoRLibrary::from_json(qor, &design)?;
        Ok(Instance::new(device, design, qor))
    }

    pub fn load(
        device: impl AsRef<std::path::Path>,
        design: impl AsRef<std::path::Path>,
        qor: impl AsRef<std::path::Path>,
    ) -> crate::Result<Self> {
        let device = DeviceModel::load(device)?;
        let design = DesignGraph::load(design)?;
        let qor = QoRLibrary::load(qor, &design)?;
        Ok(Instance::new(device, design, qor))
    }
}
