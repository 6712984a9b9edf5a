// SPDX-License-Identifier: Apache-2.0

//! Name-indexed weighted graph shared by the graph builders, community
//! detection, centrality and export.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Nodes are kept sorted by name; edges are sorted by `(source, target)` and
/// unique. Undirected edges are stored once with `source <= target`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    names: Vec<String>,
    edges: Vec<Edge>,
    directed: bool,
}

impl WeightedGraph {
    /// Builds a graph from named edges. Repeated edges have their weights
    /// summed; `extra_nodes` adds isolated nodes.
    pub fn from_named_edges<I, S>(directed: bool, edges: I, extra_nodes: impl IntoIterator<Item = String>) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut nodes: BTreeSet<String> = extra_nodes.into_iter().collect();
        for (a, b, w) in edges {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::data(format!(
                    "edge {} - {} has non-positive weight {w}",
                    a.as_ref(),
                    b.as_ref()
                )));
            }
            let (a, b) = (a.as_ref().to_string(), b.as_ref().to_string());
            nodes.insert(a.clone());
            nodes.insert(b.clone());
            let key = if directed || a <= b { (a, b) } else { (b, a) };
            *merged.entry(key).or_insert(0.0) += w;
        }
        let names: Vec<String> = nodes.into_iter().collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut es: Vec<Edge> = merged
            .iter()
            .map(|((a, b), &w)| Edge {
                source: index[a.as_str()],
                target: index[b.as_str()],
                weight: w,
            })
            .collect();
        es.sort_by_key(|e| (e.source, e.target));
        Ok(WeightedGraph {
            names,
            edges: es,
            directed,
        })
    }

    /// Builds from indices into an already sorted, unique name list.
    pub(crate) fn from_sorted_parts(names: Vec<String>, mut edges: Vec<Edge>, directed: bool) -> Self {
        debug_assert!(names.windows(2).all(|w| w[0] < w[1]));
        if !directed {
            for e in &mut edges {
                if e.source > e.target {
                    std::mem::swap(&mut e.source, &mut e.target);
                }
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        WeightedGraph { names, edges, directed }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.weight *= factor;
        }
        g
    }

    /// Symmetric matrix `A + Aᵀ` for directed graphs, `A` for undirected
    /// ones; a self-loop of weight `w` contributes `2w` to the diagonal.
    pub fn symmetrized(&self) -> Csr {
        let mut triples = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            if e.source == e.target {
                triples.push((e.source, e.source, 2.0 * e.weight));
            } else {
                triples.push((e.source, e.target, e.weight));
                triples.push((e.target, e.source, e.weight));
            }
        }
        Csr::from_triples(self.node_count(), triples)
    }

    /// Row `v` lists `(u, w(u→v))`. Undirected edges count both ways.
    pub fn in_adjacency(&self) -> Csr {
        let mut triples = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            triples.push((e.target, e.source, e.weight));
            if !self.directed && e.source != e.target {
                triples.push((e.source, e.target, e.weight));
            }
        }
        Csr::from_triples(self.node_count(), triples)
    }

    /// Row `u` lists `(v, w(u→v))`. Undirected edges count both ways.
    pub fn out_adjacency(&self) -> Csr {
        let mut triples = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            triples.push((e.source, e.target, e.weight));
            if !self.directed && e.source != e.target {
                triples.push((e.target, e.source, e.weight));
            }
        }
        Csr::from_triples(self.node_count(), triples)
    }

    /// Union of both directions without loop doubling.
    pub fn undirected_adjacency(&self) -> Csr {
        let mut triples = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            triples.push((e.source, e.target, e.weight));
            if e.source != e.target {
                triples.push((e.target, e.source, e.weight));
            }
        }
        Csr::from_triples(self.node_count(), triples)
    }

    /// Weakly connected component label per node, numbered by lowest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.source), find(&mut parent, e.target));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = Vec::with_capacity(n);
        for r in roots {
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out.push(label[r]);
        }
        out
    }
}

/// Compressed sparse rows with merged, column-sorted entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn from_triples(n: usize, mut triples: Vec<(usize, usize, f64)>) -> Self {
        triples.sort_by_key(|t| (t.0, t.1));
        let mut offsets = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triples.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triples {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            offsets[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, cols, vals }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.vals[self.offsets[r]..self.offsets[r + 1]].iter().sum()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }
}
