// SPDX-License-Identifier: Apache-2.0

//! Louvain modularity maximization.
//!
//! All work happens on the symmetrized weight matrix `A` (directed inputs
//! become `A + Aᵀ`, self-loops of weight `w` sit on the diagonal as `2w`).
//! Modularity with resolution `γ` is
//!
//! ```text
//! Q = 1/(2m) · Σ_c [ Σ_{i,j ∈ c} A_ij − γ · (Σ_{i ∈ c} k_i)² / (2m) ]
//! ```
//!
//! with `k_i` the row sums and `2m = Σ_i k_i`. The aggregated graph of a
//! level sums `A` blockwise, so its modularity equals that of the composed
//! assignment on the original graph.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::weighted::{Csr, WeightedGraph};

pub const DEFAULT_RESOLUTION: f64 = 1.0;
pub const MIN_MODULARITY_GAIN: f64 = 1e-7;
const MAX_PASSES: usize = 1_000;

/// Assignment of every graph node to a community, ids dense from 0 in order
/// of first appearance over the (name-sorted) nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    nodes: Vec<String>,
    communities: Vec<usize>,
    pub modularity: f64,
    pub resolution: f64,
    pub seed: u64,
    /// Modularity of the singleton start followed by one value per level.
    pub level_modularity: Vec<f64>,
}

impl Partition {
    /// Relabels `labels` densely and records the node names. Modularity is
    /// left at zero; see [`modularity`].
    pub fn from_labels(nodes: Vec<String>, labels: &[usize]) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::data(format!(
                "{} nodes but {} community labels",
                nodes.len(),
                labels.len()
            )));
        }
        Ok(Partition {
            nodes,
            communities: canonical_labels(labels),
            modularity: 0.0,
            resolution: DEFAULT_RESOLUTION,
            seed: 0,
            level_modularity: Vec::new(),
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn labels(&self) -> &[usize] {
        &self.communities
    }

    pub fn community_count(&self) -> usize {
        self.communities.iter().max().map_or(0, |m| m + 1)
    }

    pub fn community_of(&self, node: &str) -> Option<usize> {
        self.lookup().get(node).copied()
    }

    pub fn lookup(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .map(String::as_str)
            .zip(self.communities.iter().copied())
            .collect()
    }

    /// Members of each community, in node order.
    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (n, &c) in self.nodes.iter().zip(&self.communities) {
            out[c].push(n.as_str());
        }
        out
    }
}

fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn modularity_csr(adj: &Csr, comm: &[usize], resolution: f64) -> f64 {
    let n = adj.rows();
    let n_comm = comm.iter().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; n_comm];
    let mut total = vec![0.0; n_comm];
    let mut two_m = 0.0;
    for i in 0..n {
        let ci = comm[i];
        for (j, w) in adj.row(i) {
            two_m += w;
            total[ci] += w;
            if comm[j] == ci {
                internal[ci] += w;
            }
        }
    }
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for c in 0..n_comm {
        q += internal[c] - resolution * total[c] * total[c] / two_m;
    }
    q / two_m
}

/// Modularity of `p` on the symmetrized `g`. Graphs with no edges score 0.
pub fn modularity(g: &WeightedGraph, p: &Partition) -> Result<f64> {
    modularity_with_resolution(g, p, p.resolution)
}

pub fn modularity_with_resolution(g: &WeightedGraph, p: &Partition, resolution: f64) -> Result<f64> {
    let lookup = p.lookup();
    let comm = g
        .names()
        .iter()
        .map(|n| {
            lookup
                .get(n.as_str())
                .copied()
                .ok_or_else(|| Error::data(format!("node '{n}' missing from partition")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(modularity_csr(&g.symmetrized(), &comm, resolution))
}

/// One level of local moves. Returns the community of each node (not yet
/// renumbered) and whether any node moved.
fn local_moves(adj: &Csr, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = adj.rows();
    let degree: Vec<f64> = (0..n).map(|i| adj.row_sum(i)).collect();
    let two_m: f64 = degree.iter().sum();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut total = degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut neigh_w = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_moved = false;
    let mut q = modularity_csr(adj, &comm, resolution);

    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for &i in &order {
            let ci = comm[i];
            let ki = degree[i];
            for (j, w) in adj.row(i) {
                if j == i {
                    continue;
                }
                let cj = comm[j];
                if neigh_w[cj] == 0.0 {
                    touched.push(cj);
                }
                neigh_w[cj] += w;
            }
            total[ci] -= ki;

            let gain = |c: usize, nw: f64| nw - resolution * total[c] * ki / two_m;
            let mut best = ci;
            let mut best_gain = gain(ci, neigh_w[ci]);
            for &c in &touched {
                let g = gain(c, neigh_w[c]);
                if g > best_gain || (g == best_gain && c < best) {
                    best = c;
                    best_gain = g;
                }
            }
            total[best] += ki;
            comm[i] = best;
            if best != ci {
                moved = true;
            }
            for c in touched.drain(..) {
                neigh_w[c] = 0.0;
            }
        }
        if !moved {
            break;
        }
        any_moved = true;
        let next_q = modularity_csr(adj, &comm, resolution);
        let improved = next_q - q;
        q = next_q;
        if improved < MIN_MODULARITY_GAIN {
            break;
        }
    }
    (comm, any_moved)
}

fn aggregate(adj: &Csr, comm: &[usize], n_comm: usize) -> Csr {
    let mut triples = Vec::with_capacity(adj.nnz());
    for i in 0..adj.rows() {
        for (j, w) in adj.row(i) {
            triples.push((comm[i], comm[j], w));
        }
    }
    Csr::from_triples(n_comm, triples)
}

/// Louvain community detection, deterministic for a given seed.
pub fn louvain(g: &WeightedGraph, resolution: f64, seed: u64) -> Result<Partition> {
    if g.is_empty() {
        return Err(Error::data("community detection needs a nonempty graph"));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::config(format!("resolution must be positive, got {resolution}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = g.symmetrized();
    let mut assignment: Vec<usize> = (0..g.node_count()).collect();
    let mut history = vec![modularity_csr(&adj, &assignment, resolution)];

    loop {
        let (comm, moved) = local_moves(&adj, resolution, &mut rng);
        if !moved {
            break;
        }
        let dense = canonical_labels(&comm);
        let n_comm = dense.iter().max().map_or(0, |m| m + 1);
        for a in assignment.iter_mut() {
            *a = dense[*a];
        }
        adj = aggregate(&adj, &dense, n_comm);
        let identity: Vec<usize> = (0..n_comm).collect();
        let q = modularity_csr(&adj, &identity, resolution);
        let prev = *history.last().unwrap();
        history.push(q);
        if q - prev < MIN_MODULARITY_GAIN || n_comm == 1 {
            break;
        }
    }

    let mut p = Partition::from_labels(g.names().to_vec(), &assignment)?;
    p.resolution = resolution;
    p.seed = seed;
    p.level_modularity = history;
    p.modularity = modularity(g, &p)?;
    Ok(p)
}

/// Independent runs over several seeds, returned in seed order.
pub fn louvain_sweep(g: &WeightedGraph, resolution: f64, seeds: &[u64], exec: Execution) -> Result<Vec<Partition>> {
    exec.map_slice(seeds, |&s| louvain(g, resolution, s))
        .into_iter()
        .collect()
}

/// `(community id, size)` by descending size, ties by id.
pub fn community_sizes(p: &Partition) -> Vec<(usize, usize)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in p.labels() {
        *counts.entry(c).or_insert(0) += 1;
    }
    let mut out: Vec<(usize, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// Adjusted Rand Index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::data("labelings have different lengths"));
    }
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0.0) += 1.0;
        *rows.entry(x).or_insert(0.0) += 1.0;
        *cols.entry(y).or_insert(0.0) += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}
