// SPDX-License-Identifier: Apache-2.0

//! Bot-score acquisition from an external scoring service, plus the local
//! JSON-lines cache that the density stage reads offline.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const ENDPOINT_ENV: &str = "BOTSCORE_ENDPOINT";
pub const TOKEN_ENV: &str = "BOTSCORE_TOKEN";
pub const DEFAULT_RATE_LIMIT: u32 = 60;
pub const DEFAULT_MAX_RETRIES: u32 = 5;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_secs(2);
/// Scale used by services that report display scores out of five.
const DISPLAY_SCALE: f64 = 5.0;

/// Named score axis of a [`BotScoreRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Content,
    Sentiment,
    Network,
    Friend,
    Temporal,
    User,
    Overall,
}

impl Axis {
    pub const CATEGORIES: [Axis; 6] = [
        Axis::Content,
        Axis::Sentiment,
        Axis::Network,
        Axis::Friend,
        Axis::Temporal,
        Axis::User,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Content => "content",
            Axis::Sentiment => "sentiment",
            Axis::Network => "network",
            Axis::Friend => "friend",
            Axis::Temporal => "temporal",
            Axis::User => "user",
            Axis::Overall => "overall",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "content" => Axis::Content,
            "sentiment" => Axis::Sentiment,
            "network" => Axis::Network,
            "friend" => Axis::Friend,
            "temporal" => Axis::Temporal,
            "user" => Axis::User,
            "overall" => Axis::Overall,
            other => return Err(Error::config(format!("unknown score axis '{other}'"))),
        })
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The four classifier pairs examined for human/bot bimodality.
pub const DEFAULT_PAIRS: [(Axis, Axis); 4] = [
    (Axis::Content, Axis::Sentiment),
    (Axis::Network, Axis::Friend),
    (Axis::Temporal, Axis::Friend),
    (Axis::Network, Axis::Temporal),
];

/// Per-account classifier scores, normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotScoreRecord {
    pub account: String,
    pub content: Option<f64>,
    pub sentiment: Option<f64>,
    pub network: Option<f64>,
    pub friend: Option<f64>,
    pub temporal: Option<f64>,
    pub user: Option<f64>,
    /// Overall score of the language-specific model.
    pub overall: Option<f64>,
    /// Overall score of the language-independent model, when offered.
    pub overall_universal: Option<f64>,
    /// Maximum of the scale the service reported on (1 when already unit).
    pub scale: f64,
    /// Values as received, kept only when `scale != 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<BTreeMap<String, f64>>,
    pub fetched_at: DateTime<Utc>,
}

impl BotScoreRecord {
    pub fn new(account: impl Into<String>, fetched_at: DateTime<Utc>) -> Self {
        BotScoreRecord {
            account: account.into(),
            content: None,
            sentiment: None,
            network: None,
            friend: None,
            temporal: None,
            user: None,
            overall: None,
            overall_universal: None,
            scale: 1.0,
            raw: None,
            fetched_at,
        }
    }

    pub fn get(&self, axis: Axis) -> Option<f64> {
        match axis {
            Axis::Content => self.content,
            Axis::Sentiment => self.sentiment,
            Axis::Network => self.network,
            Axis::Friend => self.friend,
            Axis::Temporal => self.temporal,
            Axis::User => self.user,
            Axis::Overall => self.overall,
        }
    }

    pub fn set(&mut self, axis: Axis, value: Option<f64>) {
        let slot = match axis {
            Axis::Content => &mut self.content,
            Axis::Sentiment => &mut self.sentiment,
            Axis::Network => &mut self.network,
            Axis::Friend => &mut self.friend,
            Axis::Temporal => &mut self.temporal,
            Axis::User => &mut self.user,
            Axis::Overall => &mut self.overall,
        };
        *slot = value;
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.account.trim().is_empty() {
            return Err("empty account name".into());
        }
        let mut values: Vec<(&str, Option<f64>)> = Axis::CATEGORIES
            .iter()
            .chain([Axis::Overall].iter())
            .map(|a| (a.name(), self.get(*a)))
            .collect();
        values.push(("overall_universal", self.overall_universal));
        for (name, v) in values {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("{name} score {v} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Score records keyed by lowercased account name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreCache {
    pub records: BTreeMap<String, BotScoreRecord>,
    pub path: Option<PathBuf>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: BotScoreRecord) {
        self.records.insert(record.account.to_lowercase(), record);
    }

    pub fn get(&self, account: &str) -> Option<&BotScoreRecord> {
        self.records.get(&account.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Reads a JSON-lines cache. A missing file yields an empty cache.
pub fn load_cache(path: &Path) -> Result<ScoreCache> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(ScoreCache {
                records: BTreeMap::new(),
                path: Some(path.to_path_buf()),
            })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut cache = ScoreCache {
        records: BTreeMap::new(),
        path: Some(path.to_path_buf()),
    };
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| Error::CorruptCache {
            path: path.to_path_buf(),
            line: idx + 1,
            reason,
        };
        let rec: BotScoreRecord = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        rec.validate()
            .map_err(|r| corrupt(format!("record for '{}': {r}", rec.account)))?;
        cache.insert(rec);
    }
    Ok(cache)
}

/// Writes the cache atomically: temp file in the same directory, then rename.
pub fn store_cache(cache: &ScoreCache, path: &Path) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("cache path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        for rec in cache.records.values() {
            serde_json::to_writer(&mut f, rec)?;
            f.write_all(b"\n")?;
        }
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// `(x, y)` per cached account with both scores present, in account order.
pub fn score_pairs(cache: &ScoreCache, axis_x: Axis, axis_y: Axis) -> Result<Vec<(f64, f64)>> {
    Ok(labeled_score_pairs(cache, axis_x, axis_y)?
        .into_iter()
        .map(|(_, x, y)| (x, y))
        .collect())
}

pub fn labeled_score_pairs(cache: &ScoreCache, axis_x: Axis, axis_y: Axis) -> Result<Vec<(String, f64, f64)>> {
    if axis_x == axis_y {
        return Err(Error::config(format!("score pair needs two distinct axes, got {axis_x} twice")));
    }
    Ok(cache
        .records
        .values()
        .filter_map(|r| Some((r.account.clone(), r.get(axis_x)?, r.get(axis_y)?)))
        .collect())
}

/// Parses `x:y` (or `x-y`) into an axis pair.
pub fn parse_pair(s: &str) -> Result<(Axis, Axis)> {
    let (a, b) = s
        .split_once(':')
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| Error::config(format!("score pair '{s}' must look like x:y")))?;
    let pair = (a.parse()?, b.parse()?);
    if pair.0 == pair.1 {
        return Err(Error::config(format!("score pair '{s}' repeats an axis")));
    }
    Ok(pair)
}

/// Decodes one service response into a normalized record.
///
/// Category scores are read from `categories` (unit scale) or, failing that,
/// `display_scores` (five-point scale); overall scores from `scores.english`
/// and `scores.universal`. Any value above 1 marks the response as scaled
/// by `max_score` (default 5) and every value is divided by that maximum.
pub fn parse_score_response(account: &str, body: &str, fetched_at: DateTime<Utc>) -> std::result::Result<BotScoreRecord, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("malformed response: {e}"))?;
    if let Some(err) = v.get("error").filter(|e| !e.is_null()) {
        return Err(format!("service error: {err}"));
    }
    let display = v.get("display_scores");
    let categories = v.get("categories").or(display).unwrap_or(&v);
    let mut raw: BTreeMap<String, f64> = BTreeMap::new();
    for axis in Axis::CATEGORIES {
        if let Some(x) = categories.get(axis.name()).and_then(Value::as_f64) {
            raw.insert(axis.name().to_string(), x);
        }
    }
    let overall_src = v.get("scores").or(display);
    let english = overall_src
        .and_then(|s| s.get("english"))
        .and_then(Value::as_f64)
        .or_else(|| v.get("overall").and_then(Value::as_f64));
    let universal = overall_src.and_then(|s| s.get("universal")).and_then(Value::as_f64);
    if let Some(e) = english {
        raw.insert("overall".into(), e);
    }
    if let Some(u) = universal {
        raw.insert("overall_universal".into(), u);
    }
    if raw.is_empty() {
        return Err("response carried no scores".into());
    }
    if let Some((k, x)) = raw.iter().find(|(_, x)| !x.is_finite() || **x < 0.0) {
        return Err(format!("invalid {k} score {x}"));
    }

    let in_unit = raw.values().all(|x| *x <= 1.0);
    let scale = if in_unit {
        1.0
    } else {
        v.get("max_score").and_then(Value::as_f64).unwrap_or(DISPLAY_SCALE)
    };
    if let Some((k, x)) = raw.iter().find(|(_, x)| **x > scale) {
        return Err(format!("{k} score {x} exceeds advertised maximum {scale}"));
    }

    let mut rec = BotScoreRecord::new(account, fetched_at);
    for axis in Axis::CATEGORIES {
        rec.set(axis, raw.get(axis.name()).map(|x| x / scale));
    }
    rec.overall = raw.get("overall").map(|x| x / scale);
    rec.overall_universal = raw.get("overall_universal").map(|x| x / scale);
    rec.scale = scale;
    if scale != 1.0 {
        rec.raw = Some(raw);
    }
    rec.validate()?;
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout(String),
    Other(String),
}

/// One POST carrying a JSON body.
pub trait Transport {
    fn post_json(&mut self, url: &str, token: &str, body: &str) -> std::result::Result<HttpResponse, TransportError>;
}

/// Blocking HTTP transport over `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn post_json(&mut self, url: &str, token: &str, body: &str) -> std::result::Result<HttpResponse, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if !token.is_empty() {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        match req.send(body) {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let body = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| TransportError::Other(e.to_string()))?;
                Ok(HttpResponse { status, body })
            }
            Err(ureq::Error::Timeout(t)) => Err(TransportError::Timeout(t.to_string())),
            Err(e) => Err(TransportError::Other(e.to_string())),
        }
    }
}

/// Monotonic time source used for pacing; mocked in tests.
pub trait Clock {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&mut self, d: Duration);
    fn utc_now(&self) -> DateTime<Utc>;
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
    fn sleep(&mut self, d: Duration) {
        std::thread::sleep(d);
    }
    fn utc_now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Clock that only advances when slept on.
#[derive(Debug, Clone)]
pub struct MockClock {
    pub elapsed: Duration,
    pub base: DateTime<Utc>,
    pub sleeps: Vec<Duration>,
}

impl MockClock {
    pub fn new(base: DateTime<Utc>) -> Self {
        MockClock {
            elapsed: Duration::ZERO,
            base,
            sleeps: Vec::new(),
        }
    }
}

impl Clock for MockClock {
    fn now(&self) -> Duration {
        self.elapsed
    }
    fn sleep(&mut self, d: Duration) {
        self.sleeps.push(d);
        self.elapsed += d;
    }
    fn utc_now(&self) -> DateTime<Utc> {
        let secs = self.elapsed.as_secs() as i64;
        self.base + chrono::Duration::seconds(secs)
    }
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub endpoint: String,
    pub token: String,
    /// Requests per minute, retries included.
    pub rate_limit: u32,
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>) -> Self {
        FetchConfig {
            endpoint: endpoint.into(),
            token: token.into(),
            rate_limit: DEFAULT_RATE_LIMIT,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_base: DEFAULT_BACKOFF_BASE,
        }
    }

    /// Endpoint and token from `BOTSCORE_ENDPOINT` / `BOTSCORE_TOKEN`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .map_err(|_| Error::config(format!("{ENDPOINT_ENV} is not set")))?;
        let token = std::env::var(TOKEN_ENV).unwrap_or_default();
        Ok(Self::new(endpoint, token))
    }

    fn interval(&self) -> Duration {
        Duration::from_secs_f64(60.0 / self.rate_limit as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unavailable {
    pub account: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchOutcome {
    pub fetched: Vec<BotScoreRecord>,
    pub unavailable: Vec<Unavailable>,
    pub retries: usize,
    pub retry_log: Vec<String>,
    /// Clock reading at the start of every request sent.
    pub request_times: Vec<Duration>,
}

/// Paced, retrying client for the scoring service.
///
/// Request starts are spaced at least `60 / rate_limit` seconds apart, and a
/// batch does not return before its last slot has elapsed, so `n` requests
/// occupy at least `n · 60 / rate_limit` seconds.
pub struct ScoreFetcher<T: Transport, C: Clock> {
    pub transport: T,
    pub clock: C,
    pub config: FetchConfig,
    next_slot: Duration,
}

enum Attempt {
    Done(BotScoreRecord),
    Unavailable(String),
    Retry(String),
}

impl<T: Transport, C: Clock> ScoreFetcher<T, C> {
    pub fn new(transport: T, clock: C, config: FetchConfig) -> Result<Self> {
        if config.rate_limit < 1 {
            return Err(Error::config("rate limit must be >= 1 request per minute"));
        }
        if config.endpoint.trim().is_empty() {
            return Err(Error::config("scoring endpoint is empty"));
        }
        let next_slot = clock.now();
        Ok(ScoreFetcher {
            transport,
            clock,
            config,
            next_slot,
        })
    }

    fn wait_for_slot(&mut self) -> Duration {
        let now = self.clock.now();
        if now < self.next_slot {
            self.clock.sleep(self.next_slot - now);
        }
        let start = self.clock.now();
        self.next_slot = start + self.config.interval();
        start
    }

    fn attempt(&mut self, account: &str, outcome: &mut FetchOutcome) -> Result<Attempt> {
        let start = self.wait_for_slot();
        outcome.request_times.push(start);
        let body = serde_json::json!({ "screen_name": account }).to_string();
        let resp = match self
            .transport
            .post_json(&self.config.endpoint, &self.config.token, &body)
        {
            Ok(r) => r,
            Err(TransportError::Timeout(m)) => return Ok(Attempt::Retry(format!("timeout: {m}"))),
            Err(TransportError::Other(m)) => return Ok(Attempt::Retry(format!("transport: {m}"))),
        };
        Ok(match resp.status {
            200..=299 => match parse_score_response(account, &resp.body, self.clock.utc_now()) {
                Ok(rec) => Attempt::Done(rec),
                Err(reason) => Attempt::Unavailable(reason),
            },
            401 | 403 => {
                return Err(Error::Auth(format!(
                    "scoring service answered {} for '{account}'",
                    resp.status
                )))
            }
            404 => Attempt::Unavailable("account not found".into()),
            410 => Attempt::Unavailable("account suspended".into()),
            429 => Attempt::Retry("throttled (429)".into()),
            500..=599 => Attempt::Retry(format!("server error ({})", resp.status)),
            s => Attempt::Unavailable(format!("unexpected status {s}")),
        })
    }

    /// Fetches every account once, merging successes into `cache`.
    pub fn fetch(&mut self, accounts: &[String], cache: &mut ScoreCache) -> Result<FetchOutcome> {
        let mut outcome = FetchOutcome::default();
        for account in accounts {
            let mut retries = 0u32;
            loop {
                match self.attempt(account, &mut outcome)? {
                    Attempt::Done(rec) => {
                        cache.insert(rec.clone());
                        outcome.fetched.push(rec);
                        break;
                    }
                    Attempt::Unavailable(reason) => {
                        outcome.unavailable.push(Unavailable {
                            account: account.clone(),
                            reason,
                        });
                        break;
                    }
                    Attempt::Retry(reason) => {
                        if retries >= self.config.max_retries {
                            outcome.unavailable.push(Unavailable {
                                account: account.clone(),
                                reason: format!("{reason}; gave up after {retries} retries"),
                            });
                            break;
                        }
                        let delay = self.config.backoff_base * 2u32.pow(retries);
                        retries += 1;
                        outcome.retries += 1;
                        outcome
                            .retry_log
                            .push(format!("{account}: {reason}; retry {retries} in {}s", delay.as_secs_f64()));
                        self.clock.sleep(delay);
                    }
                }
            }
        }
        if !outcome.request_times.is_empty() {
            let now = self.clock.now();
            if now < self.next_slot {
                self.clock.sleep(self.next_slot - now);
            }
        }
        Ok(outcome)
    }
}

/// Convenience wrapper over [`ScoreFetcher`].
pub fn fetch_scores<T: Transport, C: Clock>(
    accounts: &[String],
    transport: T,
    clock: C,
    config: FetchConfig,
    cache: &mut ScoreCache,
) -> Result<FetchOutcome> {
    ScoreFetcher::new(transport, clock, config)?.fetch(accounts, cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::collections::VecDeque;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 1, 2, 0, 0, 0).unwrap()
    }

    struct Scripted(VecDeque<std::result::Result<HttpResponse, TransportError>>);

    impl Transport for Scripted {
        fn post_json(&mut self, _: &str, _: &str, body: &str) -> std::result::Result<HttpResponse, TransportError> {
            assert!(body.contains("screen_name"));
            self.0.pop_front().expect("unexpected extra request")
        }
    }

    fn ok(body: &str) -> std::result::Result<HttpResponse, TransportError> {
        Ok(HttpResponse { status: 200, body: body.into() })
    }

    fn status(s: u16) -> std::result::Result<HttpResponse, TransportError> {
        Ok(HttpResponse { status: s, body: String::new() })
    }

    const ALL_09: &str = r#"{"categories":{"content":0.9,"sentiment":0.9,"network":0.9,"friend":0.9,"temporal":0.9,"user":0.9},"scores":{"english":0.9,"universal":0.8}}"#;

    #[test]
    fn six_subscores_parsed() {
        let mut cache = ScoreCache::new();
        let out = fetch_scores(
            &["bot1".to_string()],
            Scripted(vec![ok(ALL_09)].into()),
            MockClock::new(t0()),
            FetchConfig::new("http://mock", "tok"),
            &mut cache,
        )
        .unwrap();
        assert_eq!(out.fetched.len(), 1);
        let r = &out.fetched[0];
        for a in Axis::CATEGORIES {
            assert_eq!(r.get(a), Some(0.9));
        }
        assert_eq!(r.overall_universal, Some(0.8));
        assert_eq!(r.scale, 1.0);
        assert!(cache.get("BOT1").is_some());
    }

    #[test]
    fn throttle_twice_then_success() {
        let mut cache = ScoreCache::new();
        let mut f = ScoreFetcher::new(
            Scripted(vec![status(429), status(429), ok(ALL_09)].into()),
            MockClock::new(t0()),
            FetchConfig::new("http://mock", ""),
        )
        .unwrap();
        let out = f.fetch(&["bot1".to_string()], &mut cache).unwrap();
        assert_eq!(out.fetched.len(), 1);
        assert_eq!(out.retries, 2);
        assert_eq!(out.retry_log.len(), 2);
        assert!(f.clock.sleeps.contains(&Duration::from_secs(2)));
        assert!(f.clock.sleeps.contains(&Duration::from_secs(4)));
    }

    #[test]
    fn gives_up_after_five_retries() {
        let mut cache = ScoreCache::new();
        let script = (0..6).map(|_| Err(TransportError::Timeout("slow".into()))).collect();
        let out = fetch_scores(
            &["a".to_string()],
            Scripted(script),
            MockClock::new(t0()),
            FetchConfig::new("http://mock", ""),
            &mut cache,
        )
        .unwrap();
        assert_eq!(out.retries, 5);
        assert_eq!(out.request_times.len(), 6);
        assert_eq!(out.unavailable.len(), 1);
        assert!(cache.is_empty());
    }

    #[test]
    fn auth_failure_fatal_missing_recorded() {
        let mut cache = ScoreCache::new();
        let err = fetch_scores(
            &["a".to_string()],
            Scripted(vec![status(401)].into()),
            MockClock::new(t0()),
            FetchConfig::new("http://mock", "bad"),
            &mut cache,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Auth(_)));

        let out = fetch_scores(
            &["gone".to_string(), "banned".to_string()],
            Scripted(vec![status(404), status(410)].into()),
            MockClock::new(t0()),
            FetchConfig::new("http://mock", ""),
            &mut cache,
        )
        .unwrap();
        assert_eq!(out.unavailable.len(), 2);
        assert_eq!(out.unavailable[1].reason, "account suspended");
    }

    #[test]
    fn display_scale_normalized_and_raw_kept() {
        let body = r#"{"display_scores":{"content":4.5,"sentiment":1.0,"network":2.5,"friend":0.5,"temporal":5.0,"user":3.0,"english":4.0}}"#;
        let r = parse_score_response("x", body, t0()).unwrap();
        assert_eq!(r.scale, 5.0);
        assert_eq!(r.content, Some(0.9));
        assert_eq!(r.temporal, Some(1.0));
        assert_eq!(r.overall, Some(0.8));
        assert_eq!(r.raw.as_ref().unwrap()["content"], 4.5);

        assert!(parse_score_response("x", r#"{"content":7.0}"#, t0()).is_err());
        assert!(parse_score_response("x", r#"{"content":0.5,"max_score":10.0,"user":8.0}"#, t0()).is_ok());
        assert!(parse_score_response("x", "{}", t0()).is_err());
        assert!(parse_score_response("x", r#"{"error":"Not authorized"}"#, t0()).is_err());
    }

    #[test]
    fn pacing_spreads_requests() {
        let n = 130;
        let script = (0..n).map(|_| ok(ALL_09)).collect();
        let accounts: Vec<String> = (0..n).map(|i| format!("acct{i}")).collect();
        let mut cache = ScoreCache::new();
        let mut cfg = FetchConfig::new("http://mock", "");
        cfg.rate_limit = 60;
        let mut f = ScoreFetcher::new(Scripted(script), MockClock::new(t0()), cfg).unwrap();
        let out = f.fetch(&accounts, &mut cache).unwrap();
        assert!(f.clock.now() >= Duration::from_secs(n as u64));
        let times = &out.request_times;
        for (i, &t) in times.iter().enumerate() {
            let in_window = times[i..].iter().take_while(|&&u| u < t + Duration::from_secs(60)).count();
            assert!(in_window <= 60);
        }
    }

    #[test]
    fn rejects_zero_rate() {
        let mut cfg = FetchConfig::new("http://mock", "");
        cfg.rate_limit = 0;
        assert!(ScoreFetcher::new(Scripted(VecDeque::new()), MockClock::new(t0()), cfg).is_err());
    }

    fn record(account: &str, v: f64) -> BotScoreRecord {
        let mut r = BotScoreRecord::new(account, t0());
        for a in Axis::CATEGORIES {
            r.set(a, Some(v));
        }
        r.overall = Some(v);
        r
    }

    #[test]
    fn cache_roundtrip_missing_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.jsonl");
        assert!(load_cache(&path).unwrap().is_empty());

        let mut c = ScoreCache::new();
        c.insert(record("Alpha", 0.1));
        c.insert(record("beta", 0.5));
        let mut scaled = record("gamma", 0.2);
        scaled.scale = 5.0;
        scaled.raw = Some([("content".to_string(), 1.0)].into_iter().collect());
        c.insert(scaled);
        store_cache(&c, &path).unwrap();
        let back = load_cache(&path).unwrap();
        assert_eq!(back.records, c.records);

        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() - 20]).unwrap();
        match load_cache(&path) {
            Err(Error::CorruptCache { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected corrupt cache, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_cached_score_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut r = record("a", 0.5);
        r.friend = Some(1.5);
        fs::write(&path, serde_json::to_string(&r).unwrap()).unwrap();
        assert!(matches!(load_cache(&path), Err(Error::CorruptCache { line: 1, .. })));
    }

    #[test]
    fn pairs_skip_missing_axis() {
        let mut c = ScoreCache::new();
        c.insert(record("a", 0.2));
        let mut b = record("b", 0.7);
        b.sentiment = None;
        c.insert(b);
        assert_eq!(score_pairs(&c, Axis::Network, Axis::Friend).unwrap().len(), 2);
        assert_eq!(score_pairs(&c, Axis::Content, Axis::Sentiment).unwrap(), vec![(0.2, 0.2)]);
        assert!(score_pairs(&c, Axis::User, Axis::User).is_err());
        assert!("botness".parse::<Axis>().is_err());
        assert_eq!(parse_pair("network:temporal").unwrap(), (Axis::Network, Axis::Temporal));
        for (x, y) in DEFAULT_PAIRS {
            assert!(score_pairs(&c, x, y).unwrap().len() <= c.len());
        }
    }
}
