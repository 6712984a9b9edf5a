// SPDX-License-Identifier: Apache-2.0

//! Tweet archive ingestion.
//!
//! Two archive shapes are accepted: newline-delimited JSON (Twitter v1.1
//! field names, or the canonical form written by [`write_jsonl`]) and CSV
//! exports with a configurable column mapping. Both normalize into
//! [`Tweet`] records collected in a [`Dataset`].

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One archived tweet event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: String,
    pub author_id: String,
    pub author_screen_name: String,
    pub created_at: DateTime<Utc>,
    pub source_client: String,
    pub text: String,
    pub mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_created_at: Option<DateTime<Utc>>,
}

impl Tweet {
    pub fn is_retweet(&self) -> bool {
        self.retweet_of.is_some()
    }
}

/// An ordered, duplicate-free collection of tweets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    tweets: Vec<Tweet>,
    ids: HashSet<String>,
    window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    provenance: String,
}

impl Dataset {
    pub fn new(provenance: impl Into<String>) -> Self {
        Dataset {
            provenance: provenance.into(),
            ..Default::default()
        }
    }

    /// Builds a dataset keeping the first occurrence of each tweet id.
    /// Returns the number of duplicates dropped.
    pub fn from_tweets(provenance: impl Into<String>, tweets: impl IntoIterator<Item = Tweet>) -> (Self, usize) {
        let mut d = Dataset::new(provenance);
        let mut dups = 0;
        for t in tweets {
            if !d.push(t) {
                dups += 1;
            }
        }
        (d, dups)
    }

    /// Appends a tweet; returns false (and drops it) if the id is already present.
    pub fn push(&mut self, tweet: Tweet) -> bool {
        if !self.ids.insert(tweet.tweet_id.clone()) {
            return false;
        }
        self.tweets.push(tweet);
        true
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn window(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        self.window
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: impl Into<String>) {
        self.provenance = provenance.into();
    }

    /// Declares a collection window. Fails if the window is empty or any
    /// tweet falls outside it.
    pub fn set_window(&mut self, start: DateTime<Utc>, end: DateTime<Utc>) -> Result<()> {
        if start >= end {
            return Err(Error::config(format!("window start {start} is not before end {end}")));
        }
        if let Some(t) = self.tweets.iter().find(|t| t.created_at < start || t.created_at > end) {
            return Err(Error::data(format!(
                "tweet {} at {} lies outside window [{start}, {end}]",
                t.tweet_id, t.created_at
            )));
        }
        self.window = Some((start, end));
        Ok(())
    }

    fn derived(&self, tweets: Vec<Tweet>, provenance: String) -> Dataset {
        let ids = tweets.iter().map(|t| t.tweet_id.clone()).collect();
        Dataset {
            tweets,
            ids,
            window: self.window,
            provenance,
        }
    }
}

/// Counters produced while parsing an archive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Lines or rows that could not be decoded at all.
    pub unparseable: usize,
    /// Records decoded but lacking a required field (id, handle, timestamp).
    pub missing_fields: usize,
    /// Records dropped because their tweet id was already seen.
    pub duplicates: usize,
    pub warnings: Vec<String>,
}

impl ParseReport {
    /// Every record that did not make it into the dataset.
    pub fn skipped(&self) -> usize {
        self.unparseable + self.missing_fields
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub dataset: Dataset,
    pub report: ParseReport,
}

const MAX_WARNINGS: usize = 20;

impl ParseReport {
    fn warn(&mut self, msg: String) {
        if self.warnings.len() < MAX_WARNINGS {
            self.warnings.push(msg);
        }
    }
}

/// Extracts the inner text of an HTML anchor, or returns the trimmed input.
pub fn extract_source_client(raw: &str) -> String {
    static ANCHOR: OnceLock<Regex> = OnceLock::new();
    let re = ANCHOR.get_or_init(|| Regex::new(r"(?is)<a\b[^>]*>(.*?)</a>").unwrap());
    match re.captures(raw) {
        Some(c) => c[1].trim().to_string(),
        None => raw.trim().to_string(),
    }
}

/// Screen names following `@` in free text, in order of appearance.
pub fn extract_mentions(text: &str) -> Vec<String> {
    static MENTION: OnceLock<Regex> = OnceLock::new();
    let re = MENTION.get_or_init(|| Regex::new(r"@(\w+)").unwrap());
    re.captures_iter(text).map(|c| c[1].to_string()).collect()
}

/// Parses Twitter's classic `created_at` format, RFC 3339, several naive
/// ISO-like forms (read as UTC), or integer Unix seconds. Sub-second
/// precision is truncated.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    let parsed = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok())
        .or_else(|| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S %z").ok())
        .map(|d| d.with_timezone(&Utc))
        .or_else(|| {
            ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%m/%d/%Y %H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
                .map(|n| Utc.from_utc_datetime(&n))
        })
        .or_else(|| {
            s.parse::<i64>()
                .ok()
                .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        })?;
    Utc.timestamp_opt(parsed.timestamp(), 0).single()
}

fn str_field<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    let mut cur = v;
    for key in path {
        cur = cur.get(key)?;
    }
    if cur.is_null() {
        None
    } else {
        Some(cur)
    }
}

fn as_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn first_string(v: &Value, paths: &[&[&str]]) -> Option<String> {
    paths
        .iter()
        .find_map(|p| str_field(v, p).and_then(as_string))
}

fn tweet_from_json(v: &Value) -> Option<Tweet> {
    let tweet_id = first_string(v, &[&["tweet_id"], &["id_str"], &["id"]])?;
    let author_screen_name = first_string(v, &[&["author_screen_name"], &["user", "screen_name"], &["screen_name"]])?
        .trim_start_matches('@')
        .to_string();
    let created_at = first_string(v, &[&["created_at"]]).and_then(|s| parse_timestamp(&s))?;
    let author_id = first_string(v, &[&["author_id"], &["user", "id_str"], &["user", "id"]])
        .unwrap_or_else(|| author_screen_name.clone());
    let source_client = first_string(v, &[&["source_client"], &["source"]])
        .map(|s| extract_source_client(&s))
        .unwrap_or_default();
    let text = [&["extended_tweet", "full_text"][..], &["full_text"], &["text"]]
        .iter()
        .find_map(|p| str_field(v, p).and_then(Value::as_str))
        .unwrap_or_default()
        .to_string();

    let mentions = if let Some(Value::Array(items)) = str_field(v, &["mentions"]) {
        items.iter().filter_map(as_string).collect()
    } else if let Some(Value::Array(items)) = str_field(v, &["entities", "user_mentions"]) {
        items
            .iter()
            .filter_map(|m| str_field(m, &["screen_name"]).and_then(as_string))
            .collect()
    } else {
        extract_mentions(&text)
    };

    let retweet_of = first_string(v, &[&["retweet_of"], &["retweeted_status", "id_str"], &["retweeted_status", "id"]]);
    let author_created_at = first_string(v, &[&["author_created_at"], &["user", "created_at"]])
        .and_then(|s| parse_timestamp(&s));

    Some(Tweet {
        tweet_id,
        author_id,
        author_screen_name,
        created_at,
        source_client,
        text,
        mentions,
        retweet_of,
        author_created_at,
    })
}

fn admit(dataset: &mut Dataset, report: &mut ParseReport, tweet: Tweet, location: &str) {
    if tweet.retweet_of.as_deref() == Some(tweet.tweet_id.as_str()) {
        report.missing_fields += 1;
        report.warn(format!("{location}: tweet {} retweets itself", tweet.tweet_id));
        return;
    }
    if !dataset.push(tweet) {
        report.duplicates += 1;
    }
}

/// Parses newline-delimited JSON tweets. Bad lines are tallied, never fatal.
pub fn parse_jsonl<R: Read>(input: R) -> Result<Parsed> {
    let mut dataset = Dataset::new("jsonl");
    let mut report = ParseReport::default();
    let reader = BufReader::new(input);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::data(format!("read failed at line {line_no}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                report.unparseable += 1;
                report.warn(format!("line {line_no}: {e}"));
                continue;
            }
        };
        match tweet_from_json(&value) {
            Some(t) => admit(&mut dataset, &mut report, t, &format!("line {line_no}")),
            None => {
                report.missing_fields += 1;
                report.warn(format!("line {line_no}: missing id, screen name or timestamp"));
            }
        }
    }
    if dataset.is_empty() && report.skipped() == 0 {
        report.warn("input contained no records".to_string());
    }
    Ok(Parsed { dataset, report })
}

/// Writes the canonical JSON-lines form, one [`Tweet`] per line.
pub fn write_jsonl<W: Write>(d: &Dataset, mut out: W) -> std::io::Result<()> {
    for t in d.tweets() {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Semantic role of a CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Id,
    ScreenName,
    Created,
    Source,
    Text,
    AuthorId,
    Mentions,
    RetweetOf,
    AuthorCreated,
}

impl ColumnRole {
    pub const REQUIRED: [ColumnRole; 5] = [
        ColumnRole::Id,
        ColumnRole::ScreenName,
        ColumnRole::Created,
        ColumnRole::Source,
        ColumnRole::Text,
    ];

    pub const ALL: [ColumnRole; 9] = [
        ColumnRole::Id,
        ColumnRole::ScreenName,
        ColumnRole::Created,
        ColumnRole::Source,
        ColumnRole::Text,
        ColumnRole::AuthorId,
        ColumnRole::Mentions,
        ColumnRole::RetweetOf,
        ColumnRole::AuthorCreated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColumnRole::Id => "id",
            ColumnRole::ScreenName => "screen_name",
            ColumnRole::Created => "created",
            ColumnRole::Source => "source",
            ColumnRole::Text => "text",
            ColumnRole::AuthorId => "author_id",
            ColumnRole::Mentions => "mentions",
            ColumnRole::RetweetOf => "retweet_of",
            ColumnRole::AuthorCreated => "author_created",
        }
    }
}

impl std::str::FromStr for ColumnRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ColumnRole::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<&str> = ColumnRole::ALL.iter().map(|r| r.name()).collect();
                Error::config(format!("unknown column role '{s}' (one of {})", known.join(", ")))
            })
    }
}

/// Maps column roles to header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap(pub BTreeMap<ColumnRole, String>);

impl Default for ColumnMap {
    fn default() -> Self {
        use ColumnRole::*;
        ColumnMap(
            [
                (Id, "id"),
                (ScreenName, "screen_name"),
                (Created, "created_at"),
                (Source, "source"),
                (Text, "text"),
            ]
            .into_iter()
            .map(|(r, c)| (r, c.to_string()))
            .collect(),
        )
    }
}

impl ColumnMap {
    pub fn with(mut self, role: ColumnRole, column: impl Into<String>) -> Self {
        self.0.insert(role, column.into());
        self
    }

    pub fn without(mut self, role: ColumnRole) -> Self {
        self.0.remove(&role);
        self
    }
}

/// Parses an RFC 4180 CSV export with a header row.
pub fn parse_csv<R: Read>(input: R, column_map: &ColumnMap) -> Result<Parsed> {
    for role in ColumnRole::REQUIRED {
        if !column_map.0.contains_key(&role) {
            return Err(Error::config(format!("column map has no entry for required role '{}'", role.name())));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(format!("cannot read CSV header: {e}")))?
        .clone();
    let mut index: BTreeMap<ColumnRole, usize> = BTreeMap::new();
    for (role, col) in &column_map.0 {
        match headers.iter().position(|h| h.trim() == col) {
            Some(i) => {
                index.insert(*role, i);
            }
            None => {
                return Err(Error::config(format!(
                    "column '{col}' (role '{}') not found in CSV header",
                    role.name()
                )))
            }
        }
    }

    let mut dataset = Dataset::new("csv");
    let mut report = ParseReport::default();
    for (idx, rec) in rdr.records().enumerate() {
        let row_no = idx + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.unparseable += 1;
                report.warn(format!("row {row_no}: {e}"));
                continue;
            }
        };
        let cell = |role: ColumnRole| -> Option<&str> {
            index
                .get(&role)
                .and_then(|&i| rec.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let (Some(id), Some(handle), Some(created)) = (
            cell(ColumnRole::Id),
            cell(ColumnRole::ScreenName),
            cell(ColumnRole::Created).and_then(parse_timestamp),
        ) else {
            report.missing_fields += 1;
            report.warn(format!("row {row_no}: missing id, screen name or timestamp"));
            continue;
        };
        let handle = handle.trim_start_matches('@').to_string();
        let text = index
            .get(&ColumnRole::Text)
            .and_then(|&i| rec.get(i))
            .unwrap_or_default()
            .to_string();
        let mentions = if index.contains_key(&ColumnRole::Mentions) {
            cell(ColumnRole::Mentions)
                .map(|m| {
                    m.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
                        .map(|s| s.trim_start_matches('@'))
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default()
        } else {
            extract_mentions(&text)
        };
        let tweet = Tweet {
            tweet_id: id.to_string(),
            author_id: cell(ColumnRole::AuthorId).map(str::to_string).unwrap_or_else(|| handle.clone()),
            author_screen_name: handle,
            created_at: created,
            source_client: cell(ColumnRole::Source).map(extract_source_client).unwrap_or_default(),
            text,
            mentions,
            retweet_of: cell(ColumnRole::RetweetOf).map(str::to_string),
            author_created_at: cell(ColumnRole::AuthorCreated).and_then(parse_timestamp),
        };
        admit(&mut dataset, &mut report, tweet, &format!("row {row_no}"));
    }
    if dataset.is_empty() && report.skipped() == 0 {
        report.warn("input contained no records".to_string());
    }
    Ok(Parsed { dataset, report })
}

/// Tweets whose source client equals `client`, ignoring case.
pub fn filter_by_source(d: &Dataset, client: &str) -> Result<Dataset> {
    if client.trim().is_empty() {
        return Err(Error::config("source client name must be nonempty"));
    }
    let wanted = client.trim().to_lowercase();
    let kept = d
        .tweets()
        .iter()
        .filter(|t| t.source_client.to_lowercase() == wanted)
        .cloned()
        .collect();
    Ok(d.derived(kept, format!("{} | source={}", d.provenance(), client.trim())))
}

/// Tweets with `start <= created_at <= end`; the result declares that window.
pub fn filter_by_window(d: &Dataset, start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Dataset> {
    if start >= end {
        return Err(Error::config(format!("window start {start} is not before end {end}")));
    }
    let kept = d
        .tweets()
        .iter()
        .filter(|t| t.created_at >= start && t.created_at <= end)
        .cloned()
        .collect();
    let mut out = d.derived(kept, format!("{} | window", d.provenance()));
    out.window = Some((start, end));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub tweet_count: usize,
    pub distinct_authors: usize,
    pub distinct_sources: usize,
    pub retweet_count: usize,
    pub mention_count: usize,
    /// Retweets over total; absent for an empty dataset.
    pub retweet_share: Option<f64>,
}

pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    let authors: HashSet<&str> = d.tweets().iter().map(|t| t.author_id.as_str()).collect();
    let sources: HashSet<&str> = d.tweets().iter().map(|t| t.source_client.as_str()).collect();
    let retweet_count = d.tweets().iter().filter(|t| t.is_retweet()).count();
    let mention_count = d.tweets().iter().map(|t| t.mentions.len()).sum();
    DatasetStats {
        tweet_count: d.len(),
        distinct_authors: authors.len(),
        distinct_sources: sources.len(),
        retweet_count,
        mention_count,
        retweet_share: (!d.is_empty()).then(|| retweet_count as f64 / d.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn tweet(id: &str, author: &str, hour: u32, source: &str) -> Tweet {
        Tweet {
            tweet_id: id.into(),
            author_id: author.into(),
            author_screen_name: author.into(),
            created_at: Utc.with_ymd_and_hms(2017, 12, 25, hour, 0, 0).unwrap(),
            source_client: source.into(),
            text: String::new(),
            mentions: vec![],
            retweet_of: None,
            author_created_at: None,
        }
    }

    #[test]
    fn anchor_source_extracted() {
        let line = r#"{"id_str":"1","user":{"screen_name":"bot1","id_str":"9"},"created_at":"Sun Dec 31 19:19:22 +0000 2017","source":"<a href=\"https://about.twitter.com/products/tweetdeck\" rel=\"nofollow\">TweetDeck</a>","text":"hola @focal_account"}"#;
        let p = parse_jsonl(line.as_bytes()).unwrap();
        assert_eq!(p.dataset.len(), 1);
        let t = &p.dataset.tweets()[0];
        assert_eq!(t.source_client, "TweetDeck");
        assert_eq!(t.author_id, "9");
        assert_eq!(t.mentions, vec!["focal_account".to_string()]);
        assert_eq!(t.created_at, ts("2017-12-31T19:19:22Z"));
    }

    #[test]
    fn plain_source_kept() {
        assert_eq!(extract_source_client("  Twitter Web Client "), "Twitter Web Client");
    }

    #[test]
    fn empty_stream() {
        let p = parse_jsonl(&b""[..]).unwrap();
        assert_eq!(p.dataset.len(), 0);
        assert_eq!(p.report.skipped(), 0);
        assert_eq!(p.report.warnings.len(), 1);
    }

    #[test]
    fn missing_timestamps_are_tallied() {
        let mut lines = String::new();
        for i in 0..10 {
            if i == 3 || i == 7 {
                lines.push_str(&format!("{{\"id_str\":\"{i}\",\"user\":{{\"screen_name\":\"u{i}\"}}}}\n"));
            } else {
                lines.push_str(&format!(
                    "{{\"id_str\":\"{i}\",\"user\":{{\"screen_name\":\"u{i}\"}},\"created_at\":\"2017-12-26T00:00:0{}Z\"}}\n",
                    i
                ));
            }
        }
        let p = parse_jsonl(lines.as_bytes()).unwrap();
        assert_eq!(p.dataset.len(), 8);
        assert_eq!(p.report.skipped(), 2);
    }

    #[test]
    fn garbage_lines_not_fatal() {
        let input = "not json\n{\"id\":5,\"screen_name\":\"a\",\"created_at\":\"1514160000\"}\n";
        let p = parse_jsonl(input.as_bytes()).unwrap();
        assert_eq!(p.dataset.len(), 1);
        assert_eq!(p.report.unparseable, 1);
        assert_eq!(p.dataset.tweets()[0].tweet_id, "5");
    }

    #[test]
    fn duplicates_first_wins() {
        let input = "{\"id\":\"1\",\"screen_name\":\"a\",\"created_at\":\"2017-12-26T00:00:00Z\",\"text\":\"first\"}\n\
                     {\"id\":\"1\",\"screen_name\":\"b\",\"created_at\":\"2017-12-26T00:00:00Z\",\"text\":\"second\"}\n";
        let p = parse_jsonl(input.as_bytes()).unwrap();
        assert_eq!(p.dataset.len(), 1);
        assert_eq!(p.report.duplicates, 1);
        assert_eq!(p.dataset.tweets()[0].text, "first");
    }

    #[test]
    fn retweet_linkage_from_v11() {
        let input = r#"{"id_str":"2","user":{"screen_name":"a"},"created_at":"2017-12-26T00:00:00Z","retweeted_status":{"id_str":"1"},"entities":{"user_mentions":[{"screen_name":"orig"}]}}"#;
        let p = parse_jsonl(input.as_bytes()).unwrap();
        let t = &p.dataset.tweets()[0];
        assert_eq!(t.retweet_of.as_deref(), Some("1"));
        assert_eq!(t.mentions, vec!["orig".to_string()]);
    }

    #[test]
    fn self_retweet_rejected() {
        let input = r#"{"id_str":"2","user":{"screen_name":"a"},"created_at":"2017-12-26T00:00:00Z","retweet_of":"2"}"#;
        let p = parse_jsonl(input.as_bytes()).unwrap();
        assert!(p.dataset.is_empty());
        assert_eq!(p.report.skipped(), 1);
    }

    #[test]
    fn timestamp_formats() {
        let want = Utc.with_ymd_and_hms(2018, 1, 1, 19, 19, 22).unwrap();
        for s in [
            "Mon Jan 01 19:19:22 +0000 2018",
            "2018-01-01T19:19:22Z",
            "2018-01-01T19:19:22.750Z",
            "2018-01-01T14:19:22-05:00",
            "2018-01-01 19:19:22",
            "01/01/2018 19:19:22",
            "1514834362",
        ] {
            assert_eq!(parse_timestamp(s), Some(want), "{s}");
        }
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    const CSV3: &str = "id,screen_name,created_at,source,text\n\
        1,a,2017-12-25 04:00:00,TweetDeck,hello @b\n\
        2,b,2017-12-25 05:00:00,Twitter for Android,\"one, two\"\n\
        3,c,2017-12-25 06:00:00,<a href=\"x\">TweetDeck</a>,\"multi\nline\"\n";

    #[test]
    fn csv_three_rows() {
        let p = parse_csv(CSV3.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(p.dataset.len(), 3);
        let t = p.dataset.tweets();
        assert_eq!(t[0].mentions, vec!["b".to_string()]);
        assert_eq!(t[1].text, "one, two");
        assert_eq!(t[2].text, "multi\nline");
        assert_eq!(t[2].source_client, "TweetDeck");
    }

    #[test]
    fn csv_missing_role_is_config_error() {
        let map = ColumnMap::default().without(ColumnRole::Created);
        let err = parse_csv(CSV3.as_bytes(), &map).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("created")), "{err}");
    }

    #[test]
    fn csv_missing_header_column_named() {
        let map = ColumnMap::default().with(ColumnRole::Mentions, "user_mentions");
        let err = parse_csv(CSV3.as_bytes(), &map).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("user_mentions")), "{err}");
    }

    #[test]
    fn csv_structured_mentions() {
        let csv = "id,screen_name,created_at,source,text,mentions\n1,a,2017-12-25 04:00:00,Web,hi @z,@b;c\n";
        let map = ColumnMap::default().with(ColumnRole::Mentions, "mentions");
        let p = parse_csv(csv.as_bytes(), &map).unwrap();
        assert_eq!(p.dataset.tweets()[0].mentions, vec!["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn source_filter_case_insensitive() {
        let (d, _) = Dataset::from_tweets(
            "t",
            vec![
                tweet("1", "a", 1, "TweetDeck"),
                tweet("2", "b", 2, "Twitter Web Client"),
                tweet("3", "c", 3, "TweetDeck"),
                tweet("4", "d", 4, "Twitter for iPhone"),
                tweet("5", "e", 5, "Twitter for Android"),
            ],
        );
        let f = filter_by_source(&d, "tweetdeck").unwrap();
        assert_eq!(f.tweets().iter().map(|t| t.tweet_id.as_str()).collect::<Vec<_>>(), ["1", "3"]);
        assert_eq!(filter_by_source(&d, "NoSuchClient").unwrap().len(), 0);
        assert!(filter_by_source(&d, " ").is_err());
    }

    #[test]
    fn window_filter() {
        let (d, _) = Dataset::from_tweets("t", (1..=4).map(|h| tweet(&h.to_string(), "a", h, "x")));
        let at = |h| Utc.with_ymd_and_hms(2017, 12, 25, h, 0, 0).unwrap();
        let f = filter_by_window(&d, at(2), at(3)).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.window(), Some((at(2), at(3))));
        assert_eq!(filter_by_window(&d, at(0), at(23)).unwrap().tweets(), d.tweets());
        let early = Utc.with_ymd_and_hms(2017, 12, 24, 0, 0, 0).unwrap();
        assert_eq!(filter_by_window(&d, early, at(0)).unwrap().len(), 0);
        assert!(matches!(filter_by_window(&d, at(3), at(3)), Err(Error::Config(_))));
    }

    #[test]
    fn stats_small() {
        let empty = dataset_stats(&Dataset::default());
        assert_eq!(empty.tweet_count, 0);
        assert_eq!(empty.retweet_share, None);

        let mut ts = vec![
            tweet("1", "a", 1, "x"),
            tweet("2", "b", 2, "x"),
            tweet("3", "c", 3, "y"),
            tweet("4", "a", 4, "x"),
        ];
        ts[1].retweet_of = Some("1".into());
        ts[2].retweet_of = Some("1".into());
        let (d, _) = Dataset::from_tweets("t", ts);
        let s = dataset_stats(&d);
        assert_eq!((s.tweet_count, s.distinct_authors, s.distinct_sources), (4, 3, 2));
        assert_eq!(s.retweet_share, Some(0.5));
    }

    #[test]
    fn set_window_checks_members() {
        let (mut d, _) = Dataset::from_tweets("t", vec![tweet("1", "a", 5, "x")]);
        let at = |h| Utc.with_ymd_and_hms(2017, 12, 25, h, 0, 0).unwrap();
        assert!(d.set_window(at(6), at(7)).is_err());
        assert!(d.set_window(at(7), at(6)).is_err());
        d.set_window(at(4), at(6)).unwrap();
    }
}
