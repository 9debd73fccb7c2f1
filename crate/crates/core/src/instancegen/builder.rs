use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{
    DesignFile, DesignGraph, DeviceModel, EdgeKind, EdgeSpec, FunctionSpec, Instance, KernelKind,
    KernelSpec, LoopInfo, QoRLibrary, QoRPoint, QorFile, ResourceVector, Template, BASELINE_ID,
};

/// Programmatic construction of instances. Every function gets a template named
/// after itself; the first point given is its baseline.
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    design: DesignFile,
    qor: QorFile,
    device: DeviceModel,
}

impl InstanceBuilder {
    pub fn new(device: DeviceModel) -> Self {
        InstanceBuilder {
            design: DesignFile {
                kernels: Vec::new(),
                edges: Vec::new(),
            },
            qor: QorFile {
                templates: BTreeMap::new(),
                name_rules: Vec::new(),
            },
            device,
        }
    }

    fn kernel(mut self, name: &str, kind: KernelKind, functions: &[&str]) -> Self {
        self.design.kernels.push(KernelSpec {
            name: name.to_string(),
            kind,
            functions: functions
                .iter()
                .map(|f| FunctionSpec {
                    name: f.to_string(),
                    template: Some(f.to_string()),
                })
                .collect(),
        });
        self
    }

    pub fn dataflow(self, name: &str, functions: &[&str]) -> Self {
        self.kernel(name, KernelKind::Dataflow, functions)
    }

    pub fn non_dataflow(self, name: &str, function: &str) -> Self {
        self.kernel(name, KernelKind::NonDataflow, &[function])
    }

    pub fn fifo(mut self, src: &str, dst: &str, width: u64) -> Self {
        self.design.edges.push(EdgeSpec {
            src: src.to_string(),
            dst: dst.to_string(),
            kind: EdgeKind::Fifo,
            width,
        });
        self
    }

    pub fn ram(mut self, src: &str, dst: &str) -> Self {
        self.design.edges.push(EdgeSpec {
            src: src.to_string(),
            dst: dst.to_string(),
            kind: EdgeKind::Ram,
            width: 0,
        });
        self
    }

    /// Sets the points of `function`'s template as (latency, resources) pairs.
    pub fn points(mut self, function: &str, points: &[(u64, ResourceVector)]) -> Self {
        let points = points
            .iter()
            .enumerate()
            .map(|(i, &(latency, resources))| QoRPoint {
                id: if i == 0 {
                    BASELINE_ID.to_string()
                } else {
                    format!("p{i}")
                },
                directives: BTreeMap::new(),
                latency,
                resources,
            })
            .collect();
        let t = self
            .qor
            .templates
            .entry(function.to_string())
            .or_insert_with(|| Template {
                loops: Vec::new(),
                points: Vec::new(),
            });
        t.points = points;
        self
    }

    /// Like [`points`](Self::points) with single-resource (LUT) costs.
    pub fn lut_points(self, function: &str, points: &[(u64, u64)]) -> Self {
        let pts: Vec<(u64, ResourceVector)> = points
            .iter()
            .map(|&(l, r)| (l, ResourceVector::new(0, 0, 0, r, 0)))
            .collect();
        self.points(function, &pts)
    }

    pub fn loops(mut self, function: &str, loops: Vec<LoopInfo>) -> Self {
        self.qor
            .templates
            .entry(function.to_string())
            .or_insert_with(|| Template {
                loops: Vec::new(),
                points: Vec::new(),
            })
            .loops = loops;
        self
    }

    pub fn files(&self) -> (&DesignFile, &QorFile, &DeviceModel) {
        (&self.design, &self.qor, &self.device)
    }

    pub fn into_files(self) -> (DesignFile, QorFile, DeviceModel) {
        (self.design, self.qor, self.device)
    }

    pub fn build(self) -> Result<Instance> {
        let design = DesignGraph::from_file(self.design)?;
        let qor = QoRLibrary::from_file(self.qor, &design)?;
        Ok(Instance::new(self.device.validated()?, design, qor))
    }
}
