// SPDX-License-Identifier: Apache-2.0

//! Eigenvector centrality by power iteration, and the botmaster ranking.
//!
//! Iteration uses the shifted operator `M + I`. The shift leaves the
//! principal eigenvector unchanged but keeps bipartite graphs (stars, even
//! cycles) from oscillating between two normalized states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::weighted::{Csr, WeightedGraph};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Centrality flows along edges: being pointed at by central nodes counts.
    In,
    /// Pointing at central nodes counts.
    Out,
    Undirected,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            "undirected" | "both" => Ok(Direction::Undirected),
            other => Err(Error::config(format!("unknown direction '{other}' (in|out|undirected)"))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Undirected => "undirected",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CentralityOptions {
    pub direction: Direction,
    pub tol: f64,
    pub max_iter: usize,
    /// Normalize every weakly connected component to its own maximum.
    pub per_component: bool,
    pub exec: Execution,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        CentralityOptions {
            direction: Direction::Undirected,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            per_component: false,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    nodes: Vec<String>,
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub direction: Direction,
}

impl CentralityScores {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn get(&self, node: &str) -> Option<f64> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(node))
            .ok()
            .map(|i| self.scores[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.nodes.iter().map(String::as_str).zip(self.scores.iter().copied())
    }
}

/// Row `v` of the returned matrix holds the weights feeding node `v`.
pub fn operator(g: &WeightedGraph, direction: Direction) -> Csr {
    match direction {
        Direction::In => g.in_adjacency(),
        Direction::Out => g.out_adjacency(),
        Direction::Undirected => g.undirected_adjacency(),
    }
}

pub fn eigenvector_centrality(g: &WeightedGraph, direction: Direction, tol: f64, max_iter: usize) -> Result<CentralityScores> {
    eigenvector_centrality_with(
        g,
        &CentralityOptions {
            direction,
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

pub fn eigenvector_centrality_with(g: &WeightedGraph, opts: &CentralityOptions) -> Result<CentralityScores> {
    if g.is_empty() {
        return Err(Error::data("centrality needs a nonempty graph"));
    }
    if g.edge_count() == 0 {
        return Err(Error::data("centrality is undefined for a graph without edges"));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::config("tolerance must be positive"));
    }
    if opts.max_iter < 1 {
        return Err(Error::config("max_iter must be >= 1"));
    }
    let m = operator(g, opts.direction);
    let n = g.node_count();

    // Each group is normalized independently; one group unless per_component.
    let (group, n_groups) = if opts.per_component {
        let c = g.components();
        let k = c.iter().max().map_or(0, |x| x + 1);
        (c, k)
    } else {
        (vec![0; n], 1)
    };
    let mut has_edge = vec![false; n_groups];
    for e in g.edges() {
        has_edge[group[e.source]] = true;
    }

    let mut x = vec![1.0f64; n];
    for (i, xi) in x.iter_mut().enumerate() {
        if !has_edge[group[i]] {
            *xi = 0.0;
        }
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut y = opts.exec.map_range(n, |v| {
            let mut acc = x[v];
            for (u, w) in m.row(v) {
                acc += w * x[u];
            }
            acc
        });
        normalize_groups(&mut y, &group, n_groups);
        let change = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    normalize_groups(&mut x, &group, n_groups);
    Ok(CentralityScores {
        nodes: g.names().to_vec(),
        scores: x,
        iterations,
        converged,
        direction: opts.direction,
    })
}

fn normalize_groups(x: &mut [f64], group: &[usize], n_groups: usize) {
    let mut max = vec![0.0f64; n_groups];
    for (v, &g) in x.iter().zip(group) {
        max[g] = max[g].max(*v);
    }
    for (v, &g) in x.iter_mut().zip(group) {
        if max[g] > 0.0 {
            *v /= max[g];
        }
    }
}

/// Top `top_n` accounts by descending score, ties broken by name.
pub fn rank_accounts(c: &CentralityScores, top_n: usize) -> Result<Vec<(String, f64)>> {
    if top_n < 1 {
        return Err(Error::config("top_n must be >= 1"));
    }
    let mut rows: Vec<(String, f64)> = c.iter().map(|(n, s)| (n.to_string(), s)).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(top_n);
    Ok(rows)
}

/// `1.0` for the normalized maximum, six decimals otherwise.
pub fn format_score(score: f64) -> String {
    if score == 1.0 {
        "1.0".to_string()
    } else {
        format!("{score:.6}")
    }
}

/// Two aligned columns: account, score.
pub fn render_ranking_table(rows: &[(String, f64)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, score) in rows {
        out.push_str(&format!("{name:<width$}   {}\n", format_score(*score)));
    }
    out
}
