// SPDX-License-Identifier: Apache-2.0

//! Synthetic corpora with planted coordinated teams.
//!
//! A focal account posts original tweets. Each planted team retweets its own
//! wave targets in unison (within `±jitter_seconds` of the wave time) from
//! TweetDeck; team handles share a prefix and a numeric suffix, and team
//! accounts are registered within `creation_window_days` of each other.
//! Organic background accounts retweet or mention at uniformly random times.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Tweet};

pub const ORGANIC: &str = "organic";
const TEAM_CLIENT: &str = "TweetDeck";
const ORGANIC_CLIENTS: [&str; 4] = ["Twitter for Android", "Twitter for iPhone", "Twitter Web Client", "Twitter Lite"];
const DEFAULT_PREFIXES: [&str; 8] = ["rivera", "santos", "zelaya", "bulnes", "cerrato", "arguet", "duron", "chavez"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_teams: usize,
    pub team_size: usize,
    pub waves_per_team: usize,
    pub jitter_seconds: i64,
    pub n_background_accounts: usize,
    pub background_tweets: usize,
    pub seed: u64,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    /// Handle prefix per team; teams beyond the list get `team<k>`.
    pub name_prefixes: Vec<String>,
    /// Creation window per team; the last value repeats for further teams.
    pub creation_window_days: Vec<u32>,
    pub focal_account: String,
    /// Original tweets by the focal account that organic accounts react to.
    pub organic_originals: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_teams: 5,
            team_size: 20,
            waves_per_team: 50,
            jitter_seconds: 0,
            n_background_accounts: 500,
            background_tweets: 2_000,
            seed: 42,
            window_start: Utc.with_ymd_and_hms(2017, 12, 25, 3, 55, 22).unwrap(),
            window_end: Utc.with_ymd_and_hms(2018, 1, 1, 19, 19, 22).unwrap(),
            name_prefixes: DEFAULT_PREFIXES.iter().map(|s| s.to_string()).collect(),
            creation_window_days: vec![2],
            focal_account: "focal_account".to_string(),
            organic_originals: 200,
        }
    }
}

impl SynthConfig {
    pub fn prefix(&self, team: usize) -> String {
        self.name_prefixes
            .get(team)
            .cloned()
            .unwrap_or_else(|| format!("team{team}"))
    }

    pub fn creation_window(&self, team: usize) -> u32 {
        self.creation_window_days
            .get(team)
            .or(self.creation_window_days.last())
            .copied()
            .unwrap_or(2)
    }

    fn validate(&self) -> Result<()> {
        if self.window_start >= self.window_end {
            return Err(Error::config("synthetic window start must precede its end"));
        }
        if self.jitter_seconds < 0 {
            return Err(Error::config("jitter must be >= 0"));
        }
        let seconds = (self.window_end - self.window_start).num_seconds();
        if self.waves_per_team as i64 > seconds {
            return Err(Error::config(format!(
                "{} waves per team do not fit into a {seconds}-second window",
                self.waves_per_team
            )));
        }
        if self.n_background_accounts == 0 && self.background_tweets > 0 {
            return Err(Error::config("background tweets requested without background accounts"));
        }
        if self.focal_account.trim().is_empty() {
            return Err(Error::config("focal account name is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wave {
    pub team: usize,
    pub original_id: String,
    pub time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamTruth {
    pub label: String,
    pub prefix: String,
    pub accounts: Vec<String>,
    pub creation_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthBookkeeping {
    pub tweets: usize,
    pub retweets: usize,
    pub authors: usize,
    pub mentions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Account → team label, or [`ORGANIC`].
    pub labels: BTreeMap<String, String>,
    pub teams: Vec<TeamTruth>,
    pub waves: Vec<Wave>,
    pub counts: SynthBookkeeping,
}

impl GroundTruth {
    pub fn label(&self, account: &str) -> Option<&str> {
        self.labels.get(account).map(String::as_str)
    }

    pub fn is_planted(&self, account: &str) -> bool {
        self.label(account).is_some_and(|l| l != ORGANIC)
    }
}

struct Builder {
    tweets: Vec<Tweet>,
    next_id: u64,
}

impl Builder {
    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("{:012}", self.next_id)
    }
}

fn random_handle(rng: &mut ChaCha8Rng) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let len = rng.random_range(7..=10);
    (0..len).map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char).collect()
}

/// Generates a corpus and its ground truth. Identical configs give
/// identical output.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = config.window_start;
    let span = (config.window_end - start).num_seconds();
    let at = |s: i64| start + Duration::seconds(s.clamp(0, span));
    let mut b = Builder {
        tweets: Vec::new(),
        next_id: 0,
    };
    let mut labels = BTreeMap::new();
    let focal = config.focal_account.clone();
    labels.insert(focal.clone(), ORGANIC.to_string());
    let focal_created = Utc.with_ymd_and_hms(2011, 3, 1, 0, 0, 0).unwrap();

    let original = |b: &mut Builder, created: DateTime<Utc>| -> String {
        let id = b.id();
        b.tweets.push(Tweet {
            tweet_id: id.clone(),
            author_id: format!("uid_{focal}"),
            author_screen_name: focal.clone(),
            created_at: created,
            source_client: "Twitter Web Client".into(),
            text: format!("Original post {id}"),
            mentions: vec![],
            retweet_of: None,
            author_created_at: Some(focal_created),
        });
        id
    };

    let mut teams = Vec::new();
    let mut waves = Vec::new();
    let creation_epoch = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let mut used_suffixes = std::collections::HashSet::new();
    for team in 0..config.n_teams {
        let prefix = config.prefix(team);
        let label = format!("team_{team}");
        let cw = config.creation_window(team) as i64;
        // Teams are registered at least 40 days apart.
        let base = creation_epoch + Duration::days(team as i64 * 60 + rng.random_range(0..20));
        let mut accounts = Vec::with_capacity(config.team_size);
        let mut dates = Vec::with_capacity(config.team_size);
        let mut created = Vec::with_capacity(config.team_size);
        for _ in 0..config.team_size {
            let name = loop {
                let suffix: u32 = rng.random_range(10_000..100_000_000);
                let name = format!("{prefix}{suffix}");
                if used_suffixes.insert(name.clone()) {
                    break name;
                }
            };
            let date = base + Duration::days(rng.random_range(0..=cw));
            let secs_in_day = rng.random_range(0..86_400);
            created.push(Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap()) + Duration::seconds(secs_in_day));
            labels.insert(name.clone(), label.clone());
            accounts.push(name);
            dates.push(date);
        }

        let mut times: Vec<i64> = Vec::with_capacity(config.waves_per_team);
        let mut taken = std::collections::HashSet::new();
        while times.len() < config.waves_per_team {
            let t = rng.random_range(0..=span);
            if taken.insert(t) {
                times.push(t);
            }
        }
        times.sort_unstable();
        for &t in &times {
            let lead = rng.random_range(30..=600).min(t);
            let orig = original(&mut b, at(t - lead));
            waves.push(Wave {
                team,
                original_id: orig.clone(),
                time: at(t),
            });
            for (name, &account_created) in accounts.iter().zip(&created) {
                let j = if config.jitter_seconds > 0 {
                    rng.random_range(-config.jitter_seconds..=config.jitter_seconds)
                } else {
                    0
                };
                let id = b.id();
                b.tweets.push(Tweet {
                    tweet_id: id,
                    author_id: format!("uid_{name}"),
                    author_screen_name: name.clone(),
                    created_at: at(t + j),
                    source_client: TEAM_CLIENT.into(),
                    text: format!("RT @{focal}: Original post {orig}", focal = config.focal_account),
                    mentions: vec![config.focal_account.clone()],
                    retweet_of: Some(orig.clone()),
                    author_created_at: Some(account_created),
                });
            }
        }
        teams.push(TeamTruth {
            label,
            prefix,
            accounts,
            creation_dates: dates,
        });
    }

    let organic_origs: Vec<(String, i64)> = (0..config.organic_originals)
        .map(|_| {
            let t = rng.random_range(0..=span);
            (original(&mut b, at(t)), t)
        })
        .collect();
    let mut background = Vec::with_capacity(config.n_background_accounts);
    for _ in 0..config.n_background_accounts {
        let name = loop {
            let n = random_handle(&mut rng);
            if !labels.contains_key(&n) {
                break n;
            }
        };
        let created = Utc.with_ymd_and_hms(2009, 1, 1, 0, 0, 0).unwrap()
            + Duration::seconds(rng.random_range(0..(8 * 365 * 86_400)));
        labels.insert(name.clone(), ORGANIC.to_string());
        background.push((name, created));
    }
    for _ in 0..config.background_tweets {
        let (name, created) = background.choose(&mut rng).expect("validated nonempty").clone();
        let client = *ORGANIC_CLIENTS.choose(&mut rng).unwrap();
        let id = b.id();
        let retweet = !organic_origs.is_empty() && rng.random_bool(0.6);
        let tweet = if retweet {
            let (orig, t0) = organic_origs.choose(&mut rng).unwrap().clone();
            let t = rng.random_range(t0..=span);
            Tweet {
                tweet_id: id,
                author_id: format!("uid_{name}"),
                author_screen_name: name,
                created_at: at(t),
                source_client: client.into(),
                text: format!("RT @{}: Original post {orig}", config.focal_account),
                mentions: vec![config.focal_account.clone()],
                retweet_of: Some(orig),
                author_created_at: Some(created),
            }
        } else {
            let t = rng.random_range(0..=span);
            Tweet {
                tweet_id: id.clone(),
                author_id: format!("uid_{name}"),
                author_screen_name: name,
                created_at: at(t),
                source_client: client.into(),
                text: format!("@{} comment {id}", config.focal_account),
                mentions: vec![config.focal_account.clone()],
                retweet_of: None,
                author_created_at: Some(created),
            }
        };
        b.tweets.push(tweet);
    }

    let mut tweets = b.tweets;
    tweets.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.tweet_id.cmp(&b.tweet_id)));
    let counts = SynthBookkeeping {
        tweets: tweets.len(),
        retweets: tweets.iter().filter(|t| t.retweet_of.is_some()).count(),
        authors: tweets
            .iter()
            .map(|t| t.author_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        mentions: tweets.iter().map(|t| t.mentions.len()).sum(),
    };
    let (mut dataset, dups) = Dataset::from_tweets(format!("synth seed={}", config.seed), tweets);
    debug_assert_eq!(dups, 0);
    dataset.set_window(config.window_start, config.window_end)?;
    Ok((
        dataset,
        GroundTruth {
            labels,
            teams,
            waves,
            counts,
        },
    ))
}
