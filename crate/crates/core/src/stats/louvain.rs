//! Seeded Louvain community detection on weighted undirected graphs,
//! optimizing resolution-scaled modularity
//! Q = (1/2m) * sum_ij [A_ij - gamma * k_i k_j / (2m)] * delta(c_i, c_j).
//!
//! Node visit order is shuffled from the seed, which replaces the usual
//! nondeterminism of the algorithm with reproducibility: the same graph and
//! seed always produce the same assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

use super::CooccurrenceGraph;
use crate::error::{Error, Result};

/// Result of a community detection run.
#[derive(Debug, Clone, Serialize)]
pub struct CommunityAssignment {
    /// Node index -> community id; ids are contiguous from 0, numbered by
    /// the smallest node index each community contains.
    pub communities: Vec<usize>,
    pub modularity: f64,
    pub resolution: f64,
}

impl CommunityAssignment {
    pub fn community_count(&self) -> usize {
        self.communities.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Weighted undirected graph in adjacency form. Self-loop weight is stored
/// once and contributes twice to the node degree.
struct WGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    /// Sum of edge weights plus self-loop weights (m).
    total_w: f64,
    degree: Vec<f64>,
}

impl WGraph {
    fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Result<Self> {
        let mut g = WGraph {
            n,
            adj: vec![Vec::new(); n],
            self_w: vec![0.0; n],
            total_w: 0.0,
            degree: vec![0.0; n],
        };
        for &(a, b, w) in edges {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Argument(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            let (a, b) = (a as usize, b as usize);
            if a == b {
                g.self_w[a] += w;
                g.degree[a] += 2.0 * w;
            } else {
                g.adj[a].push((b, w));
                g.adj[b].push((a, w));
                g.degree[a] += w;
                g.degree[b] += w;
            }
            g.total_w += w;
        }
        Ok(g)
    }

    /// Modularity of `assignment` at resolution `gamma`.
    fn modularity(&self, assignment: &[usize], gamma: f64) -> f64 {
        if self.total_w == 0.0 {
            return 0.0;
        }
        let m = self.total_w;
        let n_com = assignment.iter().copied().max().map_or(0, |x| x + 1);
        let mut internal = vec![0.0; n_com];
        let mut tot = vec![0.0; n_com];
        for i in 0..self.n {
            let c = assignment[i];
            tot[c] += self.degree[i];
            internal[c] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                if j > i && assignment[j] == c {
                    internal[c] += w;
                }
            }
        }
        let mut q = 0.0;
        for c in 0..n_com {
            q += internal[c] / m - gamma * (tot[c] / (2.0 * m)).powi(2);
        }
        q
    }

    /// One Louvain level: local moves until no move improves modularity.
    /// Returns the node -> community assignment (community ids arbitrary but
    /// deterministic) and whether any node moved.
    fn one_level(&self, gamma: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let m = self.total_w;
        let mut node2com: Vec<usize> = (0..self.n).collect();
        let mut tot: Vec<f64> = self.degree.clone();

        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);

        let mut any_move = false;
        let mut q_prev = self.modularity(&node2com, gamma);
        for _pass in 0..64 {
            let mut moves = 0usize;
            for &i in &order {
                let current = node2com[i];
                // Weight from i to each neighboring community.
                let mut w2c: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, w) in &self.adj[i] {
                    *w2c.entry(node2com[j]).or_insert(0.0) += w;
                }
                tot[current] -= self.degree[i];

                let gain = |com: usize, w_ic: f64| -> f64 {
                    w_ic - gamma * tot[com] * self.degree[i] / (2.0 * m)
                };
                let mut best_com = current;
                let mut best_gain = gain(current, w2c.get(&current).copied().unwrap_or(0.0));
                for (&com, &w_ic) in &w2c {
                    if com == current {
                        continue;
                    }
                    let g = gain(com, w_ic);
                    if g > best_gain {
                        best_gain = g;
                        best_com = com;
                    }
                }
                tot[best_com] += self.degree[i];
                if best_com != current {
                    node2com[i] = best_com;
                    moves += 1;
                    any_move = true;
                }
            }
            if moves == 0 {
                break;
            }
            // Improvement sweeps never decrease modularity.
            let q_now = self.modularity(&node2com, gamma);
            assert!(
                q_now >= q_prev - 1e-9,
                "modularity decreased within a sweep: {q_prev} -> {q_now}"
            );
            q_prev = q_now;
        }
        (renumber(&node2com), any_move)
    }

    /// Collapses communities into super-nodes; inter-community weights sum
    /// into edges, intra-community weights into self-loops.
    fn aggregate(&self, assignment: &[usize]) -> WGraph {
        let n_com = assignment.iter().copied().max().map_or(0, |x| x + 1);
        let mut self_w = vec![0.0; n_com];
        let mut edge_w: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..self.n {
            let ci = assignment[i];
            self_w[ci] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                if j > i {
                    let cj = assignment[j];
                    if ci == cj {
                        self_w[ci] += w;
                    } else {
                        let key = if ci < cj { (ci, cj) } else { (cj, ci) };
                        *edge_w.entry(key).or_insert(0.0) += w;
                    }
                }
            }
        }
        let mut g = WGraph {
            n: n_com,
            adj: vec![Vec::new(); n_com],
            self_w,
            total_w: 0.0,
            degree: vec![0.0; n_com],
        };
        for c in 0..n_com {
            g.degree[c] += 2.0 * g.self_w[c];
            g.total_w += g.self_w[c];
        }
        for (&(a, b), &w) in &edge_w {
            g.adj[a].push((b, w));
            g.adj[b].push((a, w));
            g.degree[a] += w;
            g.degree[b] += w;
            g.total_w += w;
        }
        g
    }
}

/// Renumbers labels to be contiguous from 0 in order of first appearance.
fn renumber(labels: &[usize]) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next = 0usize;
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let id = *map.entry(l).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out.push(id);
    }
    out
}

/// Runs Louvain on a co-occurrence graph at the given resolution.
pub fn louvain(graph: &CooccurrenceGraph, resolution: f64, seed: u64) -> Result<CommunityAssignment> {
    if graph.nodes.is_empty() {
        return Err(Error::Argument("louvain requires a non-empty graph".into()));
    }
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::Argument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let original = WGraph::from_edges(graph.nodes.len(), &graph.edges)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // mapping[original node] = community in the current aggregated graph.
    let mut mapping: Vec<usize> = (0..original.n).collect();
    if original.total_w > 0.0 {
        let mut current = WGraph::from_edges(graph.nodes.len(), &graph.edges)?;
        loop {
            let q_before = current.modularity(&(0..current.n).collect::<Vec<_>>(), resolution);
            let (assignment, moved) = current.one_level(resolution, &mut rng);
            if !moved {
                break;
            }
            let q_after = current.modularity(&assignment, resolution);
            assert!(
                q_after >= q_before - 1e-9,
                "level did not improve modularity: {q_before} -> {q_after}"
            );
            for slot in mapping.iter_mut() {
                *slot = assignment[*slot];
            }
            current = current.aggregate(&assignment);
            if current.n == 1 {
                break;
            }
        }
    }

    // Contiguous ids ordered by the smallest original node index.
    let communities = renumber(&mapping);
    let modularity = original.modularity(&communities, resolution);
    Ok(CommunityAssignment {
        communities,
        modularity,
        resolution,
    })
}

/// Modularity of an arbitrary assignment on a co-occurrence graph, exposing
/// the same convention the optimizer uses.
pub fn modularity(graph: &CooccurrenceGraph, assignment: &[usize], resolution: f64) -> Result<f64> {
    if assignment.len() != graph.nodes.len() {
        return Err(Error::Argument(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            graph.nodes.len()
        )));
    }
    let g = WGraph::from_edges(graph.nodes.len(), &graph.edges)?;
    Ok(g.modularity(assignment, resolution))
}
