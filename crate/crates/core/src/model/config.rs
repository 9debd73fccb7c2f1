use std::collections::BTreeMap;

use super::design::DesignGraph;
use super::qor::{QoRLibrary, QoRPoint};
use super::resources::ResourceVector;
use crate::error::{Error, Result};

/// One chosen QoR point per function, stored as an index into the
/// function's latency-sorted point list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    chosen: Vec<usize>,
}

impl Configuration {
    pub fn new(chosen: Vec<usize>) -> Self {
        Configuration { chosen }
    }

    /// Every function at its no-directive point.
    pub fn baseline(qor: &QoRLibrary) -> Self {
        Configuration {
            chosen: (0..qor.num_functions())
                .map(|f| qor.baseline_index(f))
                .collect(),
        }
    }

    pub fn get(&self, f: usize) -> usize {
        self.chosen[f]
    }

    pub fn set(&mut self, f: usize, point: usize) {
        self.chosen[f] = point;
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.chosen
    }

    pub fn point<'q>(&self, qor: &'q QoRLibrary, f: usize) -> &'q QoRPoint {
        qor.point(f, self.chosen[f])
    }

    pub fn latency(&self, qor: &QoRLibrary, f: usize) -> u64 {
        self.point(qor, f).latency
    }

    pub fn resources(&self, qor: &QoRLibrary, f: usize) -> ResourceVector {
        self.point(qor, f).resources
    }

    /// Function name to point id.
    pub fn to_named(&self, graph: &DesignGraph, qor: &QoRLibrary) -> BTreeMap<String, String> {
        (0..self.chosen.len())
            .map(|f| {
                (
                    graph.function_name(f).to_string(),
                    self.point(qor, f).id.clone(),
                )
            })
            .collect()
    }

    pub fn from_named(
        named: &BTreeMap<String, String>,
        graph: &DesignGraph,
        qor: &QoRLibrary,
    ) -> Result<Self> {
        let mut chosen = Vec::with_capacity(graph.num_functions());
        for f in 0..graph.num_functions() {
            let name = graph.function_name(f);
            let id = named
                .get(name)
                .ok_or_else(|| Error::MissingChoice(name.to_string()))?;
            chosen.push(qor.point_index(f, id)?);
        }
        if let Some(extra) = named.keys().find(|k| graph.function_id(k).is_none()) {
            return Err(Error::UnknownFunction(extra.clone()));
        }
        Ok(Configuration { chosen })
    }
}
