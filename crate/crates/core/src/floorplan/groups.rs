use serde::Serialize;

use crate::model::{DesignGraph, EdgeKind};

/// Connected components of the RAM-edge subgraph. Each group must occupy a single slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RamGroups {
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// A group is pinned when it contains a non-dataflow function.
    pinned: Vec<bool>,
}

impl RamGroups {
    pub fn group_of(&self, f: usize) -> usize {
        self.group_of[f]
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    pub fn is_pinned(&self, g: usize) -> bool {
        self.pinned[g]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(Vec::as_slice)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups are numbered by their lowest function index; members are sorted.
pub fn build_ram_groups(graph: &DesignGraph) -> RamGroups {
    let n = graph.num_functions();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::Ram) {
        let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
    }
    let mut root_group = vec![usize::MAX; n];
    let mut group_of = vec![0; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for f in 0..n {
        let r = find(&mut parent, f);
        if root_group[r] == usize::MAX {
            root_group[r] = members.len();
            members.push(Vec::new());
        }
        group_of[f] = root_group[r];
        members[root_group[r]].push(f);
    }
    let pinned = members
        .iter()
        .map(|m| m.iter().any(|&f| !graph.is_dataflow(f)))
        .collect();
    RamGroups {
        group_of,
        members,
        pinned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &str) -> DesignGraph {
        DesignGraph::from_json(&format!(
            r#"{{"kernels": [
                {{"name": "K1", "kind": "dataflow", "functions": [{{"name": "A"}}, {{"name": "B"}}]}},
                {{"name": "K2", "kind": "non_dataflow", "functions": [{{"name": "C"}}]}},
                {{"name": "K3", "kind": "dataflow", "functions": [{{"name": "D"}}, {{"name": "E"}}]}}
            ], "edges": [{edges}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn toy_groups() {
        let g = graph(
            r#"{"src": "A", "dst": "B", "kind": "fifo", "width": 16},
               {"src": "D", "dst": "E", "kind": "fifo", "width": 8},
               {"src": "B", "dst": "C", "kind": "ram"},
               {"src": "C", "dst": "D", "kind": "ram"}"#,
        );
        let groups = build_ram_groups(&g);
        let sets: Vec<Vec<usize>> = groups.iter().map(<[usize]>::to_vec).collect();
        assert_eq!(sets, vec![vec![0], vec![1, 2, 3], vec![4]]);
        assert!(groups.is_pinned(1));
        assert!(!groups.is_pinned(0));
    }

    #[test]
    fn no_ram_edges_gives_singletons() {
        let groups = build_ram_groups(&graph(""));
        assert_eq!(groups.len(), 5);
        assert!(groups.iter().all(|m| m.len() == 1));
    }

    #[test]
    fn ram_chain_is_transitive() {
        let g = graph(
            r#"{"src": "A", "dst": "B", "kind": "ram"},
               {"src": "B", "dst": "C", "kind": "ram"},
               {"src": "D", "dst": "C", "kind": "ram"}"#,
        );
        let groups = build_ram_groups(&g);
        assert_eq!(groups.members(groups.group_of(3)), &[0, 1, 2, 3]);
        assert_eq!(groups.len(), 2);
    }
}
