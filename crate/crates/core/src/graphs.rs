// SPDX-License-Identifier: Apache-2.0

//! Mention networks and timed co-retweet coordination graphs.
//!
//! A coordination event is a retweet, keyed by the retweeted tweet and the
//! time bucket of the retweet. Accounts sharing many such keys retweeted the
//! same content at the same moment; the account-side projection of the
//! event/account incidence weights each pair by the number of shared keys.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::Dataset;
use crate::weighted::{Edge, WeightedGraph};

pub const DEFAULT_BUCKET_WIDTH: i64 = 1;
pub const DEFAULT_MIN_SHARED: u64 = 3;

/// Directed mention network: mentioner → mentioned, weight = occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionGraph {
    pub graph: WeightedGraph,
    /// Tweets whose author mentioned themselves; kept as self-loops.
    pub self_mentions: usize,
}

pub fn build_mention_graph(d: &Dataset) -> MentionGraph {
    let mut self_mentions = 0;
    let mut edges = Vec::new();
    for t in d.tweets() {
        for m in &t.mentions {
            if *m == t.author_screen_name {
                self_mentions += 1;
            }
            edges.push((t.author_screen_name.as_str(), m.as_str(), 1.0));
        }
    }
    let graph = WeightedGraph::from_named_edges(true, edges, std::iter::empty())
        .expect("unit weights are always valid");
    MentionGraph { graph, self_mentions }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoordinationEvent {
    pub original_id: String,
    pub bucket: i64,
    pub retweeter: String,
}

/// Time bucket index relative to the Unix epoch.
pub fn bucket_of(unix_seconds: i64, bucket_width: i64) -> i64 {
    unix_seconds.div_euclid(bucket_width)
}

/// One event per retweet in `d`, in dataset order.
pub fn extract_coordination_events(d: &Dataset, bucket_width: i64) -> Result<Vec<CoordinationEvent>> {
    extract_coordination_events_with(d, bucket_width, Execution::default())
}

pub fn extract_coordination_events_with(
    d: &Dataset,
    bucket_width: i64,
    exec: Execution,
) -> Result<Vec<CoordinationEvent>> {
    if bucket_width < 1 {
        return Err(Error::config(format!("bucket width must be >= 1 second, got {bucket_width}")));
    }
    let events = exec.map_slice(d.tweets(), |t| {
        t.retweet_of.as_ref().map(|orig| CoordinationEvent {
            original_id: orig.clone(),
            bucket: bucket_of(t.created_at.timestamp(), bucket_width),
            retweeter: t.author_screen_name.clone(),
        })
    });
    Ok(events.into_iter().flatten().collect())
}

/// Undirected account graph weighted by shared `(original_id, bucket)` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationGraph {
    pub graph: WeightedGraph,
    pub min_shared: u64,
    pub bucket_width: Option<i64>,
    /// Distinct `(original_id, bucket)` keys seen in the input events.
    pub event_groups: usize,
}

impl CoordinationGraph {
    pub fn weight(&self, a: &str, b: &str) -> u64 {
        let (Some(i), Some(j)) = (self.graph.index_of(a), self.graph.index_of(b)) else {
            return 0;
        };
        let (s, t) = if i <= j { (i, j) } else { (j, i) };
        self.graph
            .edges()
            .binary_search_by_key(&(s, t), |e| (e.source, e.target))
            .map(|k| self.graph.edges()[k].weight as u64)
            .unwrap_or(0)
    }
}

type PairCounts = HashMap<(u32, u32), u64>;

pub fn project_coordination_graph(events: &[CoordinationEvent], min_shared: u64) -> Result<CoordinationGraph> {
    project_coordination_graph_with(events, min_shared, Execution::default())
}

pub fn project_coordination_graph_with(
    events: &[CoordinationEvent],
    min_shared: u64,
    exec: Execution,
) -> Result<CoordinationGraph> {
    if min_shared < 1 {
        return Err(Error::config("minimum shared events k must be >= 1"));
    }
    let accounts: BTreeSet<&str> = events.iter().map(|e| e.retweeter.as_str()).collect();
    let accounts: Vec<&str> = accounts.into_iter().collect();
    let index: HashMap<&str, u32> = accounts.iter().enumerate().map(|(i, a)| (*a, i as u32)).collect();

    let mut grouped: BTreeMap<(&str, i64), Vec<u32>> = BTreeMap::new();
    for e in events {
        grouped
            .entry((e.original_id.as_str(), e.bucket))
            .or_default()
            .push(index[e.retweeter.as_str()]);
    }
    let event_groups = grouped.len();
    let groups: Vec<Vec<u32>> = grouped
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            members.dedup();
            members
        })
        .filter(|m| m.len() >= 2)
        .collect();

    let counts = exec.fold_reduce(
        &groups,
        PairCounts::new,
        |mut acc, members| {
            for (x, &a) in members.iter().enumerate() {
                for &b in &members[x + 1..] {
                    *acc.entry((a, b)).or_insert(0) += 1;
                }
            }
            acc
        },
        |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
            for (k, v) in small {
                *big.entry(k).or_insert(0) += v;
            }
            big
        },
    );

    let mut kept: Vec<((u32, u32), u64)> = counts.into_iter().filter(|&(_, w)| w >= min_shared).collect();
    kept.sort_unstable();

    let mut used: Vec<u32> = kept.iter().flat_map(|&((a, b), _)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let mut remap = vec![usize::MAX; accounts.len()];
    for (new, &old) in used.iter().enumerate() {
        remap[old as usize] = new;
    }
    let names = used.iter().map(|&i| accounts[i as usize].to_string()).collect();
    let edges = kept
        .into_iter()
        .map(|((a, b), w)| Edge {
            source: remap[a as usize],
            target: remap[b as usize],
            weight: w as f64,
        })
        .collect();

    Ok(CoordinationGraph {
        graph: WeightedGraph::from_sorted_parts(names, edges, false),
        min_shared,
        bucket_width: None,
        event_groups,
    })
}

/// Extraction followed by projection, recording the bucket width used.
pub fn build_coordination_graph(d: &Dataset, bucket_width: i64, min_shared: u64) -> Result<CoordinationGraph> {
    let events = extract_coordination_events(d, bucket_width)?;
    let mut g = project_coordination_graph(&events, min_shared)?;
    g.bucket_width = Some(bucket_width);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub weight_sum: f64,
    pub self_loops: usize,
    pub degree_p50: usize,
    pub degree_p90: usize,
    pub degree_p99: usize,
}

/// Nearest-rank quantile of an ascending slice.
fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Degree counts incident edge endpoints, so a self-loop adds two.
pub fn graph_stats(g: &WeightedGraph) -> GraphStats {
    let mut degree = vec![0usize; g.node_count()];
    for e in g.edges() {
        degree[e.source] += 1;
        degree[e.target] += 1;
    }
    degree.sort_unstable();
    GraphStats {
        nodes: g.node_count(),
        edges: g.edge_count(),
        weight_sum: g.total_weight(),
        self_loops: g.edges().iter().filter(|e| e.source == e.target).count(),
        degree_p50: nearest_rank(&degree, 0.5),
        degree_p90: nearest_rank(&degree, 0.9),
        degree_p99: nearest_rank(&degree, 0.99),
    }
}
