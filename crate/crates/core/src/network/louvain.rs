//! Louvain community detection: the classic two-phase method (local moving
//! followed by graph aggregation), with a seeded node-visit shuffle and
//! deterministic tie-breaking so runs are reproducible.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{modularity, CommunityPartition, WeightedGraph};
use crate::error::Result;

/// Upper bound on local-move sweeps within one level.
const MAX_SWEEPS_PER_LEVEL: usize = 100;

/// Louvain result plus the modularity recorded after each outer pass
/// (projected onto the input graph). The sequence is non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainTrace {
    pub partition: CommunityPartition,
    pub pass_modularities: Vec<f64>,
}

/// Runs Louvain and returns the final partition.
///
/// Moves only ever apply strictly positive modularity gains, so the result's
/// modularity is at least that of the singleton partition. Disconnected
/// components never merge (a cross-component move has no edge support).
/// Deterministic for a fixed seed.
pub fn louvain(g: &WeightedGraph, seed: u64) -> Result<CommunityPartition> {
    Ok(louvain_trace(g, seed)?.partition)
}

/// Louvain with the per-pass modularity trace.
pub fn louvain_trace(g: &WeightedGraph, seed: u64) -> Result<LouvainTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LevelGraph::from_graph(g);
    // node_of_original[i] = current aggregated node holding original node i.
    let mut node_of_original: Vec<usize> = (0..g.n_nodes()).collect();
    let mut pass_modularities = Vec::new();

    loop {
        let (assignment, moved) = level.local_moving(&mut rng);
        if !moved {
            break;
        }
        // Project onto original nodes and record the pass modularity.
        let projected: Vec<usize> = node_of_original
            .iter()
            .map(|&agg| assignment[agg])
            .collect();
        pass_modularities.push(modularity(g, &projected)?);

        let (aggregated, remap) = level.aggregate(&assignment);
        for slot in node_of_original.iter_mut() {
            *slot = remap[assignment[*slot]];
        }
        level = aggregated;
        if level.n == 1 {
            break;
        }
    }

    let final_labels: Vec<usize> = node_of_original.clone();
    let partition = CommunityPartition::from_assignment(g, &final_labels)?;
    if pass_modularities.is_empty() {
        pass_modularities.push(partition.modularity());
    }
    Ok(LouvainTrace {
        partition,
        pass_modularities,
    })
}

/// Aggregated working graph for one Louvain level.
struct LevelGraph {
    n: usize,
    /// Sorted neighbor lists (no self entries).
    nbrs: Vec<Vec<(usize, f64)>>,
    /// Internal (loop) weight per aggregated node, counted once.
    self_loop: Vec<f64>,
    /// Weighted degree: neighbor weights plus twice the self-loop.
    degree: Vec<f64>,
    /// Sum of all degrees (2m); constant across levels.
    two_m: f64,
}

impl LevelGraph {
    fn from_graph(g: &WeightedGraph) -> Self {
        let n = g.n_nodes();
        let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in g.edges() {
            nbrs[e.u].push((e.v, e.weight));
            nbrs[e.v].push((e.u, e.weight));
        }
        for list in nbrs.iter_mut() {
            list.sort_by_key(|&(nbr, _)| nbr);
        }
        let self_loop = vec![0.0; n];
        let degree: Vec<f64> = nbrs
            .iter()
            .map(|list| list.iter().map(|(_, w)| w).sum::<f64>())
            .collect();
        let two_m = degree.iter().sum();
        Self {
            n,
            nbrs,
            self_loop,
            degree,
            two_m,
        }
    }

    /// Phase one: repeatedly move nodes to the neighboring community with the
    /// best strictly positive modularity gain. Visit order is shuffled once
    /// per level; candidate communities are scanned in ascending id so ties
    /// resolve deterministically.
    fn local_moving(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.n;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut comm_tot: Vec<f64> = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        if self.two_m == 0.0 {
            return (comm, false);
        }
        let m = self.two_m / 2.0;
        let mut moved_any = false;

        for _ in 0..MAX_SWEEPS_PER_LEVEL {
            let mut moves = 0_usize;
            for &node in &order {
                let current = comm[node];
                let k_i = self.degree[node];

                let mut weight_to: BTreeMap<usize, f64> = BTreeMap::new();
                for &(nbr, w) in &self.nbrs[node] {
                    *weight_to.entry(comm[nbr]).or_insert(0.0) += w;
                }

                comm_tot[current] -= k_i;
                let gain_of = |w_ic: f64, tot: f64| -> f64 { w_ic / m - k_i * tot / (2.0 * m * m) };
                let stay_gain = gain_of(
                    weight_to.get(&current).copied().unwrap_or(0.0),
                    comm_tot[current],
                );
                let mut best_comm = current;
                let mut best_gain = stay_gain;
                for (&c, &w_ic) in &weight_to {
                    if c == current {
                        continue;
                    }
                    let gain = gain_of(w_ic, comm_tot[c]);
                    if gain > best_gain {
                        best_gain = gain;
                        best_comm = c;
                    }
                }
                comm_tot[best_comm] += k_i;
                if best_comm != current {
                    comm[node] = best_comm;
                    moves += 1;
                    moved_any = true;
                }
            }
            if moves == 0 {
                break;
            }
        }
        (comm, moved_any)
    }

    /// Phase two: contract each community into one node. Returns the new
    /// graph and the dense community-id-to-new-node map.
    fn aggregate(&self, assignment: &[usize]) -> (Self, Vec<usize>) {
        let mut ids: Vec<usize> = assignment.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut remap = vec![usize::MAX; self.n];
        for (new, &old) in ids.iter().enumerate() {
            remap[old] = new;
        }
        let k = ids.len();

        let mut nbr_maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let mut self_loop = vec![0.0_f64; k];
        // Members visited in ascending node index keeps summation order fixed.
        for node in 0..self.n {
            let new_node = remap[assignment[node]];
            self_loop[new_node] += self.self_loop[node];
            for &(nbr, w) in &self.nbrs[node] {
                let new_nbr = remap[assignment[nbr]];
                if new_nbr == new_node {
                    // Each internal edge is visited from both ends.
                    self_loop[new_node] += w / 2.0;
                } else {
                    *nbr_maps[new_node].entry(new_nbr).or_insert(0.0) += w;
                }
            }
        }

        let nbrs: Vec<Vec<(usize, f64)>> = nbr_maps
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        let degree: Vec<f64> = (0..k)
            .map(|i| nbrs[i].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self_loop[i])
            .collect();
        (
            Self {
                n: k,
                nbrs,
                self_loop,
                degree,
                two_m: self.two_m,
            },
            remap,
        )
    }
}
