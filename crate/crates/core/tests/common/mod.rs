// SPDX-License-Identifier: Apache-2.0

//! Independent reference implementations used as test oracles. They are kept
//! deliberately naive and share no code with the library kernels.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use botnet_core::bot_scoring::{Axis, BotScoreRecord, ScoreCache};
use botnet_core::ingest::{Dataset, Tweet};
use botnet_core::weighted::WeightedGraph;
use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn ts(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(secs, 0).unwrap()
}

pub fn tweet(id: &str, author: &str, secs: i64, retweet_of: Option<&str>) -> Tweet {
    Tweet {
        tweet_id: id.to_string(),
        author_id: format!("u_{author}"),
        author_screen_name: author.to_string(),
        created_at: ts(secs),
        source_client: "TweetDeck".to_string(),
        text: String::new(),
        mentions: Vec::new(),
        retweet_of: retweet_of.map(str::to_string),
        author_created_at: None,
    }
}

/// A corpus of retweets with random authors, targets and times.
pub fn random_retweet_corpus(rng: &mut ChaCha8Rng, events: usize, accounts: usize, originals: usize, span: i64) -> Dataset {
    let base = 1_514_000_000;
    let tweets = (0..events).map(|i| {
        let a = rng.random_range(0..accounts);
        let o = rng.random_range(0..originals);
        let t = base + rng.random_range(0..span);
        tweet(&format!("rt{i}"), &format!("acct{a:03}"), t, Some(&format!("orig{o}")))
    });
    Dataset::from_tweets("random", tweets).0
}

/// Pairwise intersections of per-account `(original, floor(t / width))` sets.
pub fn coordination_oracle(d: &Dataset, width: i64, k: u64) -> BTreeMap<(String, String), u64> {
    let mut keys: BTreeMap<String, BTreeSet<(String, i64)>> = BTreeMap::new();
    for t in d.tweets() {
        if let Some(o) = &t.retweet_of {
            let bucket = (t.created_at.timestamp() as f64 / width as f64).floor() as i64;
            keys.entry(t.author_screen_name.clone())
                .or_default()
                .insert((o.clone(), bucket));
        }
    }
    let names: Vec<&String> = keys.keys().collect();
    let mut out = BTreeMap::new();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let shared = keys[names[i]].intersection(&keys[names[j]]).count() as u64;
            if shared >= k {
                out.insert((names[i].clone(), names[j].clone()), shared);
            }
        }
    }
    out
}

/// Dense symmetric adjacency with self-loops counted twice on the diagonal.
pub fn dense_symmetric(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for e in g.edges() {
        if e.source == e.target {
            a[(e.source, e.source)] += 2.0 * e.weight;
        } else {
            a[(e.source, e.target)] += e.weight;
            a[(e.target, e.source)] += e.weight;
        }
    }
    a
}

/// `Q = 1/2m Σ_ij (A_ij - γ k_i k_j / 2m) δ(c_i, c_j)` over all node pairs.
pub fn modularity_oracle(g: &WeightedGraph, labels: &[usize], resolution: f64) -> f64 {
    let a = dense_symmetric(g);
    let n = g.node_count();
    let k: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[(i, j)] - resolution * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Principal eigenvector of the dense adjacency, max-normalized.
pub fn eigenvector_oracle(g: &WeightedGraph) -> Vec<f64> {
    let a = dense_symmetric(g);
    // Off-diagonal convention matches the library; loops do not occur in the
    // fixtures that use this oracle.
    let eig = SymmetricEigen::new(a);
    let mut best = 0;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let v: Vec<f64> = eig.eigenvectors.column(best).iter().map(|x| x.abs()).collect();
    let max = v.iter().cloned().fold(0.0, f64::max);
    v.into_iter().map(|x| x / max).collect()
}

/// Connected undirected graph: a random spanning tree plus `extra` chords.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> WeightedGraph {
    let name = |i: usize| format!("n{i:03}");
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((name(u), name(v), rng.random_range(0.1..5.0)));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((name(u), name(v), rng.random_range(0.1..5.0)));
        }
    }
    WeightedGraph::from_named_edges(false, edges, Vec::<String>::new()).unwrap()
}

/// Several dense blocks joined by a few light bridges.
pub fn planted_blocks(rng: &mut ChaCha8Rng, blocks: usize, size: usize, p_in: f64, bridges: usize) -> WeightedGraph {
    let name = |b: usize, i: usize| format!("b{b}_{i:02}");
    let mut edges = Vec::new();
    for b in 0..blocks {
        for i in 0..size {
            for j in (i + 1)..size {
                if rng.random_bool(p_in) {
                    edges.push((name(b, i), name(b, j), rng.random_range(1.0..3.0)));
                }
            }
        }
    }
    for _ in 0..bridges {
        let (b1, b2) = (rng.random_range(0..blocks), rng.random_range(0..blocks));
        if b1 != b2 {
            edges.push((name(b1, rng.random_range(0..size)), name(b2, rng.random_range(0..size)), 0.5));
        }
    }
    WeightedGraph::from_named_edges(false, edges, Vec::<String>::new()).unwrap()
}

/// `f(x, y) = 1/(n 2π hx hy) Σ exp(-(x - xi)²/2hx² - (y - yi)²/2hy²)` at
/// vertex `(c/(g-1), r/(g-1))`, row-major.
pub fn kde_oracle(points: &[(f64, f64)], (hx, hy): (f64, f64), g: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(g * g);
    for r in 0..g {
        for c in 0..g {
            let (x, y) = (c as f64 / (g - 1) as f64, r as f64 / (g - 1) as f64);
            let mut s = 0.0;
            for &(px, py) in points {
                let zx = (x - px) / hx;
                let zy = (y - py) / hy;
                s += (-0.5 * zx * zx).exp() * (-0.5 * zy * zy).exp();
            }
            out.push(s / (points.len() as f64 * 2.0 * std::f64::consts::PI * hx * hy));
        }
    }
    out
}

/// Repeatedly takes the earliest remaining date `d` and removes every
/// account dated in `[d, d + window]`; groups of `>= min` are kept.
pub fn batch_oracle(dates: &[(String, NaiveDate)], window: i64, min: usize) -> Vec<(NaiveDate, BTreeSet<String>)> {
    let mut remaining: Vec<(String, NaiveDate)> = dates.to_vec();
    let mut out = Vec::new();
    while let Some(start) = remaining.iter().map(|r| r.1).min() {
        let limit = start + chrono::Duration::days(window);
        let (taken, rest): (Vec<_>, Vec<_>) = remaining.into_iter().partition(|r| r.1 <= limit);
        remaining = rest;
        if taken.len() >= min {
            out.push((start, taken.into_iter().map(|r| r.0).collect()));
        }
    }
    out
}

/// Pair-counting ARI over all `n(n-1)/2` pairs.
pub fn ari_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            total += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / total;
    let max = 0.5 * (only_a + only_b);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

/// A cache whose six category scores cluster near `centers` with spread
/// `sd`, clipped to `[0, 1]`.
pub fn clustered_cache(rng: &mut ChaCha8Rng, centers: &[(f64, usize)], sd: f64) -> ScoreCache {
    let noise = Normal::new(0.0, sd).unwrap();
    let mut cache = ScoreCache::new();
    let mut id = 0;
    for &(center, count) in centers {
        for _ in 0..count {
            let mut r = BotScoreRecord::new(format!("acct{id:04}"), ts(1_514_764_800));
            id += 1;
            for axis in Axis::CATEGORIES {
                let v: f64 = center + noise.sample(rng);
                r.set(axis, Some(v.clamp(0.0, 1.0)));
            }
            r.overall = Some(center);
            cache.insert(r);
        }
    }
    cache
}
