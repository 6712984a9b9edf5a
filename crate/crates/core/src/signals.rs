// SPDX-License-Identifier: Apache-2.0

//! Account-metadata evidence of batch-created bot teams: accounts registered
//! within a few days of each other, and handles sharing a common token.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::community::Partition;
use crate::ingest::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_DAYS: i64 = 2;
pub const DEFAULT_MIN_BATCH: usize = 5;
pub const DEFAULT_MIN_TOKEN_LEN: usize = 4;
pub const DEFAULT_MIN_CLUSTER: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreationBatch {
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub accounts: Vec<String>,
    pub span_days: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchDetection {
    pub batches: Vec<CreationBatch>,
    /// Accounts without a creation timestamp.
    pub skipped: usize,
}

/// Distinct authors by name with the first creation timestamp seen.
pub fn account_creation_dates(d: &Dataset) -> Vec<(String, Option<DateTime<Utc>>)> {
    let mut created: BTreeMap<&str, Option<DateTime<Utc>>> = BTreeMap::new();
    for t in d.tweets() {
        let slot = created.entry(t.author_screen_name.as_str()).or_insert(None);
        if slot.is_none() {
            *slot = t.author_created_at;
        }
    }
    created.into_iter().map(|(n, c)| (n.to_string(), c)).collect()
}

/// Greedy segmentation of creation dates: a batch opens at the earliest
/// unassigned date and absorbs every account created within `window_days`
/// of that start. Batches smaller than `min_size` are discarded.
pub fn detect_creation_batches(
    accounts: &[(String, Option<DateTime<Utc>>)],
    window_days: i64,
    min_size: usize,
) -> Result<BatchDetection> {
    if window_days < 1 {
        return Err(Error::config("creation window must be >= 1 day"));
    }
    if min_size < 2 {
        return Err(Error::config("minimum batch size must be >= 2"));
    }
    let mut seen = HashSet::new();
    let mut dated: Vec<(NaiveDate, &str)> = Vec::new();
    let mut skipped = 0;
    for (name, created) in accounts {
        if !seen.insert(name.as_str()) {
            continue;
        }
        match created {
            Some(t) => dated.push((t.date_naive(), name.as_str())),
            None => skipped += 1,
        }
    }
    dated.sort();

    let mut batches = Vec::new();
    let mut i = 0;
    while i < dated.len() {
        let start = dated[i].0;
        let mut j = i;
        while j < dated.len() && (dated[j].0 - start).num_days() <= window_days {
            j += 1;
        }
        if j - i >= min_size {
            let end = dated[j - 1].0;
            batches.push(CreationBatch {
                window_start: start,
                window_end: end,
                accounts: dated[i..j].iter().map(|(_, n)| n.to_string()).collect(),
                span_days: (end - start).num_days(),
            });
        }
        i = j;
    }
    Ok(BatchDetection { batches, skipped })
}

/// Lowercase and drop trailing digits: `Rivera01` → `rivera`.
pub fn normalize_name(name: &str) -> String {
    name.to_lowercase().trim_end_matches(|c: char| c.is_ascii_digit()).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameCluster {
    pub shared_token: String,
    pub accounts: Vec<String>,
}

/// Mines tokens of at least `min_token_len` characters shared by at least
/// `min_size` normalized names. Tokens are substrings of the alphanumeric
/// runs of a name; a token is reported only when no longer token is shared
/// by exactly the same accounts (so `rivera` is kept, `river` is not).
/// Clusters are ordered by size (descending), then token.
pub fn detect_name_clusters(names: &[String], min_token_len: usize, min_size: usize) -> Result<Vec<NameCluster>> {
    if min_token_len < 4 {
        return Err(Error::config("minimum token length must be >= 4"));
    }
    if min_size < 3 {
        return Err(Error::config("minimum name-cluster size must be >= 3"));
    }
    let unique: BTreeSet<&str> = names.iter().map(String::as_str).collect();
    let mut support: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for &name in &unique {
        let norm = normalize_name(name);
        let mut tokens = HashSet::new();
        for run in norm.split(|c: char| !c.is_alphanumeric()) {
            let chars: Vec<char> = run.chars().collect();
            for a in 0..chars.len() {
                for b in (a + min_token_len)..=chars.len() {
                    tokens.insert(chars[a..b].iter().collect::<String>());
                }
            }
        }
        for t in tokens {
            support.entry(t).or_default().insert(name);
        }
    }
    support.retain(|_, s| s.len() >= min_size);

    // Group tokens by identical supporting sets and keep the longest ones
    // that are not substrings of another token with the same support.
    let mut by_support: BTreeMap<Vec<&str>, Vec<&String>> = BTreeMap::new();
    for (tok, set) in &support {
        by_support.entry(set.iter().copied().collect()).or_default().push(tok);
    }
    let mut clusters = Vec::new();
    for (members, tokens) in by_support {
        for t in &tokens {
            let dominated = tokens.iter().any(|o| o.len() > t.len() && o.contains(t.as_str()));
            if !dominated {
                clusters.push(NameCluster {
                    shared_token: (*t).clone(),
                    accounts: members.iter().map(|s| s.to_string()).collect(),
                });
            }
        }
    }
    clusters.sort_by(|a, b| {
        b.accounts
            .len()
            .cmp(&a.accounts.len())
            .then_with(|| a.shared_token.cmp(&b.shared_token))
    });
    Ok(clusters)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySignal {
    pub community: usize,
    pub size: usize,
    /// Members belonging to any creation batch.
    pub batch_fraction: f64,
    /// Largest share of members found in a single name cluster.
    pub name_fraction: f64,
    pub best_token: Option<String>,
    /// Mean of the two fractions.
    pub combined: f64,
}

/// Per-community signal strengths, strongest first (ties by community id).
pub fn signal_report(batches: &[CreationBatch], clusters: &[NameCluster], partition: &Partition) -> Vec<CommunitySignal> {
    let batched: HashSet<&str> = batches.iter().flat_map(|b| b.accounts.iter().map(String::as_str)).collect();
    let cluster_sets: Vec<(&str, HashSet<&str>)> = clusters
        .iter()
        .map(|c| (c.shared_token.as_str(), c.accounts.iter().map(String::as_str).collect()))
        .collect();
    let mut out: Vec<CommunitySignal> = partition
        .members()
        .into_iter()
        .enumerate()
        .map(|(community, members)| {
            let size = members.len();
            let in_batch = members.iter().filter(|m| batched.contains(*m)).count();
            let mut best: Option<(&str, usize)> = None;
            for (tok, set) in &cluster_sets {
                let overlap = members.iter().filter(|m| set.contains(*m)).count();
                if overlap > 0 && best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((tok, overlap));
                }
            }
            let frac = |k: usize| if size == 0 { 0.0 } else { k as f64 / size as f64 };
            let batch_fraction = frac(in_batch);
            let name_fraction = frac(best.map_or(0, |b| b.1));
            CommunitySignal {
                community,
                size,
                batch_fraction,
                name_fraction,
                best_token: best.map(|b| b.0.to_string()),
                combined: (batch_fraction + name_fraction) / 2.0,
            }
        })
        .collect();
    out.sort_by(|a, b| b.combined.total_cmp(&a.combined).then(a.community.cmp(&b.community)));
    out
}
