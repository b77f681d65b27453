//! Minimum spanning trees by Prim and Kruskal with a shared deterministic
//! tie-break: among equal-weight candidates, the lexicographically smaller
//! (u, v) pair wins.

use super::{Edge, SpanningTree, WeightedGraph};
use crate::error::{Error, Result};

/// Prim's algorithm, grown from node 0 over a dense adjacency table.
pub fn mst_prim(g: &WeightedGraph) -> Result<SpanningTree> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Domain("empty graph".into()));
    }
    if n == 1 {
        return SpanningTree::from_edges(g.node_ids().to_vec(), Vec::new());
    }

    let mut adj = vec![f64::INFINITY; n * n];
    for e in g.edges() {
        adj[e.u * n + e.v] = e.weight;
        adj[e.v * n + e.u] = e.weight;
    }

    let mut in_tree = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    in_tree[0] = true;
    for j in 1..n {
        dist[j] = adj[j];
        if dist[j].is_finite() {
            parent[j] = 0;
        }
    }

    let norm = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut next: Option<usize> = None;
        for j in 0..n {
            if in_tree[j] || !dist[j].is_finite() {
                continue;
            }
            let better = match next {
                None => true,
                Some(k) => {
                    dist[j] < dist[k]
                        || (dist[j] == dist[k] && norm(parent[j], j) < norm(parent[k], k))
                }
            };
            if better {
                next = Some(j);
            }
        }
        let j = match next {
            Some(j) => j,
            None => return Err(disconnected_error(g)),
        };
        let (u, v) = norm(parent[j], j);
        edges.push(Edge {
            u,
            v,
            weight: dist[j],
        });
        in_tree[j] = true;
        for k in 0..n {
            if in_tree[k] {
                continue;
            }
            let w = adj[j * n + k];
            if !w.is_finite() {
                continue;
            }
            if w < dist[k] || (w == dist[k] && norm(j, k) < norm(parent[k], k)) {
                dist[k] = w;
                parent[k] = j;
            }
        }
    }
    SpanningTree::from_edges(g.node_ids().to_vec(), edges)
}

/// Kruskal's algorithm: edges sorted by (weight, u, v) over a union-find.
pub fn mst_kruskal(g: &WeightedGraph) -> Result<SpanningTree> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::Domain("empty graph".into()));
    }
    if n == 1 {
        return SpanningTree::from_edges(g.node_ids().to_vec(), Vec::new());
    }

    let mut order: Vec<&Edge> = g.edges().iter().collect();
    order.sort_by(|a, b| {
        a.weight
            .partial_cmp(&b.weight)
            .expect("finite weights")
            .then((a.u, a.v).cmp(&(b.u, b.v)))
    });

    let mut dsu = DisjointSet::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for e in order {
        if dsu.union(e.u, e.v) {
            edges.push(*e);
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    if edges.len() != n - 1 {
        return Err(disconnected_error(g));
    }
    SpanningTree::from_edges(g.node_ids().to_vec(), edges)
}

fn disconnected_error(g: &WeightedGraph) -> Error {
    let n = g.n_nodes();
    let mut dsu = DisjointSet::new(n);
    for e in g.edges() {
        dsu.union(e.u, e.v);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<String>> = Default::default();
    for i in 0..n {
        groups
            .entry(dsu.find(i))
            .or_default()
            .push(g.node_ids()[i].clone());
    }
    Error::Disconnected {
        components: groups.into_values().collect(),
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the two roots were distinct (an edge was useful).
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
