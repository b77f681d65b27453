//! Correlation-network machinery: weighted graphs, minimum spanning trees
//! (Prim and Kruskal), Newman-Girvan modularity, and Louvain community
//! detection over the MST.

mod louvain;
mod mst;

pub use louvain::{louvain, louvain_trace, LouvainTrace};
pub use mst::{mst_kruskal, mst_prim};

use std::collections::BTreeMap;
use std::io::Write;

use crate::correlation::DistanceMatrix;
use crate::error::{Error, Result};

/// Weight assigned to zero-distance (duplicate-asset) pairs so the complete
/// graph keeps strictly positive weights; such pairs are flagged.
pub const ZERO_DISTANCE_EPSILON: f64 = 1e-12;

/// Undirected edge with endpoints ordered `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph over an ordered node list. No self-loops, no
/// duplicate edges, strictly positive finite weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
    zero_distance_pairs: Vec<(usize, usize)>,
}

impl WeightedGraph {
    pub fn new(node_ids: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let n = node_ids.len();
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= e.v {
                return Err(Error::Integrity(format!(
                    "edge endpoints must satisfy u < v, got ({}, {})",
                    e.u, e.v
                )));
            }
            if e.v >= n {
                return Err(Error::Integrity(format!(
                    "edge ({}, {}) references a node outside 0..{n}",
                    e.u, e.v
                )));
            }
            if !e.weight.is_finite() || e.weight <= 0.0 {
                return Err(Error::Domain(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
            if !seen.insert((e.u, e.v)) {
                return Err(Error::Integrity(format!(
                    "duplicate edge ({}, {})",
                    e.u, e.v
                )));
            }
        }
        Ok(Self {
            node_ids,
            edges,
            zero_distance_pairs: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Node-index pairs whose distance was zero (duplicate assets).
    pub fn zero_distance_pairs(&self) -> &[(usize, usize)] {
        &self.zero_distance_pairs
    }

    /// Sum of edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Builds the complete graph on N nodes with edge weights D_ij. Zero-distance
/// pairs (duplicate assets) receive [`ZERO_DISTANCE_EPSILON`] and are flagged.
pub fn dense_graph_from_distances(d: &DistanceMatrix) -> Result<WeightedGraph> {
    let n = d.n();
    if n < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 nodes for a dense graph, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    let mut flagged = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let mut w = d.get(u, v);
            if w < ZERO_DISTANCE_EPSILON {
                w = ZERO_DISTANCE_EPSILON;
                flagged.push((u, v));
            }
            edges.push(Edge { u, v, weight: w });
        }
    }
    let mut g = WeightedGraph::new(d.asset_ids().to_vec(), edges)?;
    g.zero_distance_pairs = flagged;
    Ok(g)
}

/// Spanning tree: exactly N-1 edges, connected and acyclic. `total_weight`
/// is the canonical-order sum of edge weights (edges sorted by (u, v)), so
/// totals from different MST algorithms compare exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
    total_weight: f64,
}

impl SpanningTree {
    /// Builds a tree from explicit edges, verifying the N-1 edge count and
    /// acyclicity (which together imply connectivity). Edges are stored in
    /// canonical (u, v) order and the total is summed in that order.
    pub fn from_edges(node_ids: Vec<String>, mut edges: Vec<Edge>) -> Result<Self> {
        let n = node_ids.len();
        if n > 0 && edges.len() != n - 1 {
            return Err(Error::Integrity(format!(
                "spanning tree over {n} nodes needs {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &edges {
            if e.u >= e.v || e.v >= n {
                return Err(Error::Integrity(format!(
                    "bad tree edge ({}, {})",
                    e.u, e.v
                )));
            }
            if !e.weight.is_finite() || e.weight <= 0.0 {
                return Err(Error::Domain(format!(
                    "tree edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
            let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if ru == rv {
                return Err(Error::Integrity(format!(
                    "tree edges contain a cycle through ({}, {})",
                    e.u, e.v
                )));
            }
            parent[ru] = rv;
        }
        edges.sort_by_key(|e| (e.u, e.v));
        let total_weight = edges.iter().map(|e| e.weight).sum();
        Ok(Self {
            node_ids,
            edges,
            total_weight,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Edges in canonical (u, v) order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// How MST edge distances enter Louvain edge weights (modularity treats
/// weights as affinities, so raw distances would invert community quality).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Similarity s = 2 - d; positive since d lies in [0, 2], monotone
    /// decreasing in distance. Clamped to [`ZERO_DISTANCE_EPSILON`] at d = 2.
    InverseSimilarity,
    /// All edges weighted 1.
    Unweighted,
}

impl WeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::InverseSimilarity => "inverse-similarity",
            WeightMode::Unweighted => "unweighted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inverse-similarity" => Ok(WeightMode::InverseSimilarity),
            "unweighted" => Ok(WeightMode::Unweighted),
            other => Err(Error::Domain(format!(
                "unknown weight mode {other:?} (expected `inverse-similarity` or `unweighted`)"
            ))),
        }
    }
}

/// Node-to-community assignment with dense labels 0..k-1, community sizes,
/// and the partition's modularity on the graph it was built against.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    assignment: Vec<usize>,
    community_sizes: Vec<usize>,
    modularity: f64,
}

impl CommunityPartition {
    /// Relabels an arbitrary assignment into dense labels (in order of first
    /// appearance by node index) and computes sizes and modularity on `g`.
    pub fn from_assignment(g: &WeightedGraph, raw: &[usize]) -> Result<Self> {
        let q = modularity(g, raw)?;
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for &label in raw {
            let next = relabel.len();
            let dense = *relabel.entry(label).or_insert(next);
            assignment.push(dense);
        }
        let k = relabel.len();
        let mut community_sizes = vec![0_usize; k];
        for &c in &assignment {
            community_sizes[c] += 1;
        }
        Ok(Self {
            assignment,
            community_sizes,
            modularity: q,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_communities(&self) -> usize {
        self.community_sizes.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn label_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn community_sizes(&self) -> &[usize] {
        &self.community_sizes
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    /// Node indices of one community, ascending.
    pub fn members(&self, label: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Flat `asset_id,community` export aligned with `node_ids`.
    pub fn write_csv<W: Write>(&self, node_ids: &[String], writer: W) -> Result<()> {
        if node_ids.len() != self.assignment.len() {
            return Err(Error::Domain(format!(
                "{} node ids for {} assignments",
                node_ids.len(),
                self.assignment.len()
            )));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["asset_id", "community"])?;
        for (id, c) in node_ids.iter().zip(&self.assignment) {
            w.write_record([id.as_str(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weighted Newman-Girvan modularity
/// Q = sum_c [ Sigma_in(c)/(2m) - (Sigma_tot(c)/(2m))^2 ],
/// where m is the total edge weight, Sigma_in counts ordered intra-community
/// pairs (each undirected edge twice), and Sigma_tot sums member degrees.
///
/// The assignment must cover every node; labels are arbitrary. A graph with
/// no edges has modularity 0 by convention.
pub fn modularity(g: &WeightedGraph, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != g.n_nodes() {
        return Err(Error::Domain(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            g.n_nodes()
        )));
    }
    let m: f64 = g.total_weight();
    if m == 0.0 {
        return Ok(0.0);
    }
    let two_m = 2.0 * m;
    let mut sum_in: BTreeMap<usize, f64> = BTreeMap::new();
    let mut sum_tot: BTreeMap<usize, f64> = BTreeMap::new();
    for e in g.edges() {
        let (cu, cv) = (assignment[e.u], assignment[e.v]);
        *sum_tot.entry(cu).or_insert(0.0) += e.weight;
        *sum_tot.entry(cv).or_insert(0.0) += e.weight;
        if cu == cv {
            *sum_in.entry(cu).or_insert(0.0) += 2.0 * e.weight;
        }
    }
    let mut q = 0.0;
    for (c, tot) in &sum_tot {
        let inside = sum_in.get(c).copied().unwrap_or(0.0);
        q += inside / two_m - (tot / two_m) * (tot / two_m);
    }
    Ok(q)
}

/// The MST with edge distances turned into Louvain affinities per `mode`.
pub fn tree_similarity_graph(tree: &SpanningTree, mode: WeightMode) -> Result<WeightedGraph> {
    let edges: Vec<Edge> = tree
        .edges()
        .iter()
        .map(|e| Edge {
            u: e.u,
            v: e.v,
            weight: match mode {
                WeightMode::InverseSimilarity => (2.0 - e.weight).max(ZERO_DISTANCE_EPSILON),
                WeightMode::Unweighted => 1.0,
            },
        })
        .collect();
    WeightedGraph::new(tree.node_ids().to_vec(), edges)
}

/// Runs Louvain on the MST with edge distances transformed per `mode`.
pub fn communities_of_mst(
    tree: &SpanningTree,
    mode: WeightMode,
    seed: u64,
) -> Result<CommunityPartition> {
    louvain(&tree_similarity_graph(tree, mode)?, seed)
}

/// DOT rendering of the MST with `community` node attributes and `weight`
/// (distance) edge attributes.
pub fn tree_to_dot(tree: &SpanningTree, partition: &CommunityPartition) -> Result<String> {
    if partition.n_nodes() != tree.n_nodes() {
        return Err(Error::Domain(format!(
            "partition covers {} nodes, tree has {}",
            partition.n_nodes(),
            tree.n_nodes()
        )));
    }
    let quote = |id: &str| format!("\"{}\"", id.replace('"', "\\\""));
    let mut out = String::from("graph mst {\n");
    for (i, id) in tree.node_ids().iter().enumerate() {
        out.push_str(&format!(
            "  {} [community={}];\n",
            quote(id),
            partition.label_of(i)
        ));
    }
    for e in tree.edges() {
        out.push_str(&format!(
            "  {} -- {} [weight={}];\n",
            quote(&tree.node_ids()[e.u]),
            quote(&tree.node_ids()[e.v]),
            e.weight
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Graph on n unit nodes from (u, v, w) triples.
    pub fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        let ids = (0..n).map(|i| format!("N{i}")).collect();
        let edges = edges
            .iter()
            .map(|&(u, v, weight)| Edge { u, v, weight })
            .collect();
        WeightedGraph::new(ids, edges).unwrap()
    }

    /// Visits every set partition of {0..n-1} as a label slice
    /// (restricted-growth strings).
    pub fn for_each_partition(n: usize, f: &mut impl FnMut(&[usize])) {
        fn rec(labels: &mut Vec<usize>, n: usize, f: &mut impl FnMut(&[usize])) {
            if labels.len() == n {
                f(labels);
                return;
            }
            let max = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);
            for label in 0..=max {
                labels.push(label);
                rec(labels, n, f);
                labels.pop();
            }
        }
        rec(&mut Vec::with_capacity(n), n, f);
    }

    /// Exhaustive maximum modularity over all set partitions.
    pub fn max_modularity_exhaustive(g: &WeightedGraph) -> (f64, Vec<usize>) {
        let mut best = f64::NEG_INFINITY;
        let mut best_labels = Vec::new();
        for_each_partition(g.n_nodes(), &mut |labels| {
            let q = modularity(g, labels).unwrap();
            if q > best {
                best = q;
                best_labels = labels.to_vec();
            }
        });
        (best, best_labels)
    }

    /// Independent direct-summation modularity oracle:
    /// Q = (1/2m) sum_ij [A_ij - k_i k_j / (2m)] delta(c_i, c_j).
    pub fn modularity_oracle(g: &WeightedGraph, labels: &[usize]) -> f64 {
        let n = g.n_nodes();
        let mut adj = vec![0.0_f64; n * n];
        let mut degree = vec![0.0_f64; n];
        for e in g.edges() {
            adj[e.u * n + e.v] += e.weight;
            adj[e.v * n + e.u] += e.weight;
            degree[e.u] += e.weight;
            degree[e.v] += e.weight;
        }
        let two_m: f64 = degree.iter().sum();
        if two_m == 0.0 {
            return 0.0;
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += adj[i * n + j] - degree[i] * degree[j] / two_m;
                }
            }
        }
        q / two_m
    }
}
