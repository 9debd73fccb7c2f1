//! Kernel / function / channel graph of an HLS design.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Dataflow,
    NonDataflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Fifo,
    Ram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    /// Explicit QoR template; when absent the name rules (then the bare name) decide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    pub kind: KernelKind,
    pub functions: Vec<FunctionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
    #[serde(default)]
    pub width: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub kernels: Vec<KernelSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

/// A function, indexed globally in kernel order.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub kernel: usize,
    pub template: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub name: String,
    pub kind: KernelKind,
    pub functions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    pub width: u64,
}

/// Validated design graph. Functions and edges are addressed by index.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGraph {
    pub kernels: Vec<Kernel>,
    pub functions: Vec<Function>,
    pub edges: Vec<Edge>,
    by_name: HashMap<String, usize>,
    /// Kernel DAG in topological order.
    kernel_order: Vec<usize>,
    kernel_succ: Vec<Vec<usize>>,
}

impl DesignGraph {
    pub fn load(path: impl AsRef<Path>) -> Result<DesignGraph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        DesignGraph::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<DesignGraph> {
        let file: DesignFile = serde_json::from_str(text).map_err(|source| Error::Json {
            what: "design".into(),
            source,
        })?;
        DesignGraph::from_file(file)
    }

    pub fn from_file(file: DesignFile) -> Result<DesignGraph> {
        if file.kernels.is_empty() {
            return Err(Error::schema("design has no kernels"));
        }
        let mut kernels = Vec::with_capacity(file.kernels.len());
        let mut functions = Vec::new();
        let mut by_name = HashMap::new();
        let mut kernel_names = HashMap::new();
        for (ki, k) in file.kernels.into_iter().enumerate() {
            if kernel_names.insert(k.name.clone(), ki).is_some() {
                return Err(Error::schema(format!("duplicate kernel `{}`", k.name)));
            }
            if k.functions.is_empty() {
                return Err(Error::schema(format!(
                    "kernel `{}` has no functions",
                    k.name
                )));
            }
            if k.kind == KernelKind::NonDataflow && k.functions.len() != 1 {
                return Err(Error::schema(format!(
                    "non-dataflow kernel `{}` must have exactly one function, found {}",
                    k.name,
                    k.functions.len()
                )));
            }
            let mut ids = Vec::with_capacity(k.functions.len());
            for f in k.functions {
                let id = functions.len();
                if by_name.insert(f.name.clone(), id).is_some() {
                    return Err(Error::schema(format!("duplicate function `{}`", f.name)));
                }
                functions.push(Function {
                    name: f.name,
                    kernel: ki,
                    template: f.template,
                });
                ids.push(id);
            }
            kernels.push(Kernel {
                name: k.name,
                kind: k.kind,
                functions: ids,
            });
        }

        let mut edges = Vec::with_capacity(file.edges.len());
        for e in file.edges {
            let lookup = |n: &str| {
                by_name
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::UnknownFunction(n.to_string()))
            };
            let (src, dst) = (lookup(&e.src)?, lookup(&e.dst)?);
            if e.kind == EdgeKind::Fifo && e.width == 0 {
                return Err(Error::schema(format!(
                    "FIFO edge {} -> {} needs a positive width",
                    e.src, e.dst
                )));
            }
            if e.kind == EdgeKind::Fifo && src == dst {
                return Err(Error::schema(format!("FIFO self-loop on `{}`", e.src)));
            }
            edges.push(Edge {
                src,
                dst,
                kind: e.kind,
                width: e.width,
            });
        }

        let mut g = DesignGraph {
            kernels,
            functions,
            edges,
            by_name,
            kernel_order: Vec::new(),
            kernel_succ: Vec::new(),
        };
        g.build_kernel_dag()?;
        Ok(g)
    }

    /// Kernel-level DAG: any edge between functions of different kernels induces a kernel edge.
    fn build_kernel_dag(&mut self) -> Result<()> {
        let n = self.kernels.len();
        let mut succ = vec![Vec::new(); n];
        for e in &self.edges {
            let (a, b) = (self.functions[e.src].kernel, self.functions[e.dst].kernel);
            if a != b && !succ[a].contains(&b) {
                succ[a].push(b);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &b in s {
                indeg[b] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).rev().filter(|&k| indeg[k] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop() {
            order.push(k);
            for &b in succ[k].iter().rev() {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&k| indeg[k] > 0).unwrap();
            return Err(Error::CyclicKernels(self.kernels[stuck].name.clone()));
        }
        self.kernel_order = order;
        self.kernel_succ = succ;
        Ok(())
    }

    pub fn to_file(&self) -> DesignFile {
        DesignFile {
            kernels: self
                .kernels
                .iter()
                .map(|k| KernelSpec {
                    name: k.name.clone(),
                    kind: k.kind,
                    functions: k
                        .functions
                        .iter()
                        .map(|&f| FunctionSpec {
                            name: self.functions[f].name.clone(),
                            template: self.functions[f].template.clone(),
                        })
                        .collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    src: self.functions[e.src].name.clone(),
                    dst: self.functions[e.dst].name.clone(),
                    kind: e.kind,
                    width: e.width,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("design serializes")
    }

    pub fn num_functions(&self) -> usize {
        self.functions.len()
    }

    pub fn function_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn function_name(&self, f: usize) -> &str {
        &self.functions[f].name
    }

    pub fn kernel_of(&self, f: usize) -> &Kernel {
        &self.kernels[self.functions[f].kernel]
    }

    pub fn is_dataflow(&self, f: usize) -> bool {
        self.kernel_of(f).kind == KernelKind::Dataflow
    }

    pub fn kernel_topo_order(&self) -> &[usize] {
        &self.kernel_order
    }

    pub fn kernel_successors(&self, k: usize) -> &[usize] {
        &self.kernel_succ[k]
    }

    /// Indices of FIFO edges, in file order.
    pub fn fifo_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == EdgeKind::Fifo)
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TOY: &str = r#"{
        "kernels": [
            {"name": "K1", "kind": "dataflow", "functions": [{"name": "A"}, {"name": "B"}]},
            {"name": "K2", "kind": "non_dataflow", "functions": [{"name": "C"}]},
            {"name": "K3", "kind": "dataflow", "functions": [{"name": "D"}, {"name": "E"}]}
        ],
        "edges": [
            {"src": "A", "dst": "B", "kind": "fifo", "width": 16},
            {"src": "D", "dst": "E", "kind": "fifo", "width": 8},
            {"src": "B", "dst": "C", "kind": "ram"},
            {"src": "C", "dst": "D", "kind": "ram"}
        ]
    }"#;

    #[test]
    fn toy_graph_is_valid() {
        let g = DesignGraph::from_json(TOY).unwrap();
        assert_eq!(g.num_functions(), 5);
        assert_eq!(g.kernel_topo_order(), &[0, 1, 2]);
        assert_eq!(g.kernel_successors(0), &[1]);
        assert!(!g.is_dataflow(g.function_id("C").unwrap()));
    }

    #[test]
    fn empty_kernel_list_is_rejected() {
        assert!(DesignGraph::from_json(r#"{"kernels": []}"#).is_err());
    }

    #[test]
    fn ram_self_loop_is_accepted() {
        let g = DesignGraph::from_json(
            r#"{"kernels": [{"name": "K", "kind": "non_dataflow", "functions": [{"name": "f"}]}],
                "edges": [{"src": "f", "dst": "f", "kind": "ram"}]}"#,
        )
        .unwrap();
        assert_eq!(g.edges.len(), 1);
    }

    #[test]
    fn unknown_function_in_edge() {
        let err = DesignGraph::from_json(
            r#"{"kernels": [{"name": "K", "kind": "dataflow", "functions": [{"name": "f"}]}],
                "edges": [{"src": "f", "dst": "g", "kind": "fifo", "width": 4}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownFunction(n) if n == "g"));
    }

    #[test]
    fn non_dataflow_with_two_functions() {
        let err = DesignGraph::from_json(
            r#"{"kernels": [{"name": "K", "kind": "non_dataflow",
                "functions": [{"name": "f"}, {"name": "g"}]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("exactly one function"));
    }

    #[test]
    fn kernel_cycle_is_rejected() {
        let err = DesignGraph::from_json(
            r#"{"kernels": [
                    {"name": "K1", "kind": "dataflow", "functions": [{"name": "a"}]},
                    {"name": "K2", "kind": "dataflow", "functions": [{"name": "b"}]}],
                "edges": [{"src": "a", "dst": "b", "kind": "fifo", "width": 4},
                          {"src": "b", "dst": "a", "kind": "ram"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CyclicKernels(_)));
    }

    #[test]
    fn round_trip() {
        let g = DesignGraph::from_json(TOY).unwrap();
        let back = DesignGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }
}
