use super::config::Configuration;
use super::design::{DesignGraph, KernelKind};
use super::qor::QoRLibrary;
use crate::error::{Error, Result};

/// Latency of every kernel: the slowest sub-function for dataflow kernels,
/// the single function otherwise. Dataflow depth is neglected.
pub fn kernel_latencies(graph: &DesignGraph, latency_of: impl Fn(usize) -> u64) -> Vec<u64> {
    graph
        .kernels
        .iter()
        .map(|k| match k.kind {
            KernelKind::Dataflow => k
                .functions
                .iter()
                .map(|&f| latency_of(f))
                .max()
                .unwrap_or(0),
            KernelKind::NonDataflow => latency_of(k.functions[0]),
        })
        .collect()
}

/// Longest path (sum of kernel latencies) through the kernel DAG.
pub fn longest_path(graph: &DesignGraph, kernel_latency: &[u64]) -> u64 {
    let mut finish = vec![0u64; graph.kernels.len()];
    let mut best = 0;
    for &k in graph.kernel_topo_order() {
        let done = finish[k] + kernel_latency[k];
        best = best.max(done);
        for &s in graph.kernel_successors(k) {
            finish[s] = finish[s].max(done);
        }
    }
    best
}

/// Design latency under `config`.
pub fn design_latency(
    graph: &DesignGraph,
    config: &Configuration,
    qor: &QoRLibrary,
) -> Result<u64> {
    if config.len() != graph.num_functions() {
        let missing = config.len().min(graph.num_functions());
        return Err(Error::MissingChoice(
            graph
                .functions
                .get(missing)
                .map(|f| f.name.clone())
                .unwrap_or_default(),
        ));
    }
    Ok(design_latency_with(graph, |f| config.latency(qor, f)))
}

pub fn design_latency_with(graph: &DesignGraph, latency_of: impl Fn(usize) -> u64) -> u64 {
    longest_path(graph, &kernel_latencies(graph, latency_of))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::design::DesignFile;
    use proptest::prelude::*;

    fn chain_graph(
        kernels: usize,
        edges: &[(usize, usize)],
        dataflow_sizes: &[usize],
    ) -> DesignGraph {
        let mut ks = Vec::new();
        for k in 0..kernels {
            let n = dataflow_sizes.get(k).copied().unwrap_or(1);
            let fns: Vec<String> = (0..n)
                .map(|j| format!(r#"{{"name": "k{k}f{j}"}}"#))
                .collect();
            ks.push(format!(
                r#"{{"name": "K{k}", "kind": "{}", "functions": [{}]}}"#,
                if n > 1 { "dataflow" } else { "non_dataflow" },
                fns.join(",")
            ));
        }
        let es: Vec<String> = edges
            .iter()
            .map(|(a, b)| format!(r#"{{"src": "k{a}f0", "dst": "k{b}f0", "kind": "ram"}}"#))
            .collect();
        let file: DesignFile = serde_json::from_str(&format!(
            r#"{{"kernels": [{}], "edges": [{}]}}"#,
            ks.join(","),
            es.join(",")
        ))
        .unwrap();
        DesignGraph::from_file(file).unwrap()
    }

    #[test]
    fn dataflow_kernel_takes_max() {
        let g = chain_graph(1, &[], &[3]);
        let lat = [3, 7, 5];
        assert_eq!(design_latency_with(&g, |f| lat[f]), 7);
    }

    #[test]
    fn series_and_parallel_kernels() {
        // K0 -> K1 in series, K2 alone.
        let g = chain_graph(3, &[(0, 1)], &[]);
        let lat = [7, 4, 5];
        assert_eq!(design_latency_with(&g, |f| lat[f]), 11);
    }

    #[test]
    fn single_kernel_identity() {
        let g = chain_graph(1, &[], &[]);
        assert_eq!(design_latency_with(&g, |_| 42), 42);
    }

    /// Enumerates every path of the kernel DAG by DFS from each kernel.
    fn brute_force(g: &DesignGraph, kl: &[u64]) -> u64 {
        fn walk(g: &DesignGraph, kl: &[u64], k: usize, acc: u64, best: &mut u64) {
            let acc = acc + kl[k];
            *best = (*best).max(acc);
            for &s in g.kernel_successors(k) {
                walk(g, kl, s, acc, best);
            }
        }
        let mut best = 0;
        for k in 0..g.kernels.len() {
            walk(g, kl, k, 0, &mut best);
        }
        best
    }

    proptest! {
        #[test]
        fn matches_path_enumeration(
            n in 1usize..=8,
            raw_edges in prop::collection::vec((0usize..8, 0usize..8), 0..16),
            lats in prop::collection::vec(1u64..100, 8),
        ) {
            // Orient every edge low -> high to keep the DAG acyclic.
            let edges: Vec<(usize, usize)> = raw_edges
                .into_iter()
                .map(|(a, b)| (a % n, b % n))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            let g = chain_graph(n, &edges, &[]);
            let kl = kernel_latencies(&g, |f| lats[f]);
            prop_assert_eq!(longest_path(&g, &kl), brute_force(&g, &kl));
        }
    }
}
