use alloc::vec;
use alloc::vec::Vec;

use super::{Link, Topology};

/// Two links conflict when either transmitter is within range of the
/// other's receiver. Shared endpoints are at distance zero, so they always
/// conflict.
pub fn links_conflict(topo: &Topology, a: Link, b: Link) -> bool {
    topo.within_range(a.tx, b.rx) || topo.within_range(b.tx, a.rx)
}

/// Conflict graph over a list of links; vertex `i` is `links[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceGraph {
    pub links: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl InterferenceGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        Self {
            links: (0..n).collect(),
            adj,
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// `D`, the largest vertex degree.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }
}

/// Conflict graph over `topology.links[i]` for each `i` in `links`.
pub fn build_interference_graph(topo: &Topology, links: &[usize]) -> InterferenceGraph {
    let mut edges = Vec::new();
    for (i, &a) in links.iter().enumerate() {
        for (j, &b) in links.iter().enumerate().skip(i + 1) {
            if links_conflict(topo, topo.links[a], topo.links[b]) {
                edges.push((i, j));
            }
        }
    }
    let mut g = InterferenceGraph::from_edges(links.len(), &edges);
    g.links = links.to_vec();
    g
}

/// Greedy coloring visiting vertices by descending degree (lower index
/// first on ties); each takes the smallest color unused by its neighbors.
/// Uses at most `D + 1` colors.
pub fn greedy_coloring(g: &InterferenceGraph) -> Vec<usize> {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    let mut color = vec![usize::MAX; n];
    let mut used = vec![false; g.max_degree() + 2];
    for v in order {
        used.iter_mut().for_each(|u| *u = false);
        for &u in g.neighbors(v) {
            if color[u] != usize::MAX {
                used[color[u]] = true;
            }
        }
        color[v] = used.iter().position(|u| !u).unwrap();
    }
    color
}
