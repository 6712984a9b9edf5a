// SPDX-License-Identifier: Apache-2.0

mod common;

use botnet_core::ingest::{
    dataset_stats, filter_by_source, filter_by_window, parse_csv, parse_jsonl, write_jsonl, ColumnMap, ColumnRole, Dataset,
    Tweet,
};
use common::ts;
use proptest::prelude::*;

fn arb_tweet() -> impl Strategy<Value = Tweet> {
    (
        "[0-9]{1,6}",
        "[a-z][a-z0-9_]{0,10}",
        1_400_000_000i64..1_600_000_000,
        prop::sample::select(vec!["TweetDeck", "Twitter for Android", "Twitter Web Client"]),
        "[ -~]{0,40}",
        prop::collection::vec("[a-zA-Z0-9_]{1,8}", 0..3),
        prop::option::of("[0-9]{1,6}"),
        prop::option::of(1_200_000_000i64..1_400_000_000),
    )
        .prop_map(|(id, name, t, src, text, mentions, rt, created)| Tweet {
            tweet_id: format!("t{id}"),
            author_id: format!("u_{name}"),
            author_screen_name: name,
            created_at: ts(t),
            source_client: src.to_string(),
            text,
            mentions,
            retweet_of: rt.map(|r| format!("o{r}")),
            author_created_at: created.map(ts),
        })
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(arb_tweet(), 0..40).prop_map(|ts| Dataset::from_tweets("prop", ts).0)
}

proptest! {
    #[test]
    fn jsonl_roundtrip(d in arb_dataset()) {
        let mut buf = Vec::new();
        write_jsonl(&d, &mut buf).unwrap();
        let back = parse_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.report.skipped(), 0);
        prop_assert_eq!(back.dataset.tweets(), d.tweets());
    }

    #[test]
    fn source_filter_idempotent(d in arb_dataset()) {
        let once = filter_by_source(&d, "tweetdeck").unwrap();
        let twice = filter_by_source(&once, "TweetDeck").unwrap();
        prop_assert_eq!(once.tweets(), twice.tweets());
        prop_assert!(once.tweets().iter().all(|t| t.source_client == "TweetDeck"));
    }

    #[test]
    fn window_filters_compose(d in arb_dataset(), a in 1_400_000_000i64..1_500_000_000, b in 1_500_000_000i64..1_600_000_000, c in 1_450_000_000i64..1_550_000_000) {
        let (s1, e1) = (ts(a), ts(b));
        let (s2, e2) = (ts(c.min(b - 1)), ts(b + 10));
        let nested = filter_by_window(&filter_by_window(&d, s1, e1).unwrap(), s2, e2).unwrap();
        let direct = filter_by_window(&d, s1.max(s2), e1.min(e2)).unwrap();
        prop_assert_eq!(nested.tweets(), direct.tweets());
        prop_assert_eq!(nested.window(), Some((s2, e2)));
    }

    #[test]
    fn stats_are_consistent(d in arb_dataset()) {
        let s = dataset_stats(&d);
        prop_assert_eq!(s.tweet_count, d.len());
        prop_assert!(s.retweet_count <= s.tweet_count);
        prop_assert!(s.distinct_authors <= s.tweet_count);
        prop_assert_eq!(s.mention_count, d.tweets().iter().map(|t| t.mentions.len()).sum::<usize>());
    }
}

#[test]
fn csv_with_quoted_text_and_custom_columns() {
    let csv = "\
tweet,user,when,client,body,rt
1,alice,2017-12-31 10:00:00,\"<a href=\"\"x\"\">TweetDeck</a>\",\"hello, @bob and @carol\",
2,bob,12/31/2017 10:00:05,Twitter Web Client,\"line one
line two\",1
1,alice,2017-12-31 10:00:00,TweetDeck,dup,
3,,2017-12-31 10:00:00,TweetDeck,no author,
";
    let map = ColumnMap::default()
        .with(ColumnRole::Id, "tweet")
        .with(ColumnRole::ScreenName, "user")
        .with(ColumnRole::Created, "when")
        .with(ColumnRole::Source, "client")
        .with(ColumnRole::Text, "body")
        .with(ColumnRole::RetweetOf, "rt");
    let p = parse_csv(csv.as_bytes(), &map).unwrap();
    assert_eq!(p.dataset.len(), 2);
    assert_eq!(p.report.duplicates, 1);
    assert_eq!(p.report.missing_fields, 1);
    let first = &p.dataset.tweets()[0];
    assert_eq!(first.source_client, "TweetDeck");
    assert_eq!(first.mentions, vec!["bob", "carol"]);
    let second = &p.dataset.tweets()[1];
    assert_eq!(second.text, "line one\nline two");
    assert_eq!(second.retweet_of.as_deref(), Some("1"));
    assert_eq!(second.created_at, ts(1_514_714_405));
}

#[test]
fn v1_archive_lines() {
    let line = r#"{"id_str":"950","created_at":"Sun Dec 31 10:00:00 +0000 2017","source":"<a href=\"http://tweetdeck.com\" rel=\"nofollow\">TweetDeck</a>","text":"RT @focal_account: hola","user":{"id_str":"77","screen_name":"santos1","created_at":"Wed Dec 06 08:00:00 +0000 2017"},"entities":{"user_mentions":[{"screen_name":"focal_account"}]},"retweeted_status":{"id_str":"900"}}"#;
    let input = format!("{line}\nnot json\n\n{{\"id_str\":\"951\"}}\n");
    let p = parse_jsonl(input.as_bytes()).unwrap();
    assert_eq!(p.dataset.len(), 1);
    assert_eq!(p.report.unparseable, 1);
    assert_eq!(p.report.missing_fields, 1);
    let t = &p.dataset.tweets()[0];
    assert_eq!(t.author_id, "77");
    assert_eq!(t.source_client, "TweetDeck");
    assert_eq!(t.mentions, vec!["focal_account"]);
    assert_eq!(t.retweet_of.as_deref(), Some("900"));
    assert_eq!(t.author_created_at, Some(ts(1_512_547_200)));
}
