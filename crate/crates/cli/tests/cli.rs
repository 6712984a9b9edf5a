// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn botnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_botnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BOTSCORE_ENDPOINT")
        .env_remove("BOTSCORE_TOKEN")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_corpus(dir: &Path) {
    ok(&botnet(&["synth", "--seed", "42", "--out", "corpus.jsonl"], dir));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&botnet(&["synth", "--seed", "7", "--out", "a.jsonl"], d));
    ok(&botnet(&["synth", "--seed", "7", "--out", "b.jsonl"], d));
    ok(&botnet(&["synth", "--seed", "8", "--out", "c.jsonl"], d));
    let read = |f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_eq!(read("a.truth.json"), read("b.truth.json"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
    let truth: Value = serde_json::from_slice(&read("a.truth.json")).unwrap();
    assert_eq!(truth["teams"].as_array().unwrap().len(), 5);
}

#[test]
fn run_twice_gives_identical_report_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_corpus(d);
    for out in ["r1", "r2"] {
        ok(&botnet(&["run", "--input", "corpus.jsonl", "--truth", "corpus.truth.json", "--out", out], d));
    }
    let a = fs::read(d.join("r1/report.json")).unwrap();
    assert_eq!(a, fs::read(d.join("r2/report.json")).unwrap());
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert!(report["communities"]["count"].as_u64().unwrap() >= 5);
    assert!(report["validation"]["adjusted_rand_index"].as_f64().unwrap() >= 0.95);
    for file in report["artifacts"].as_object().unwrap().values() {
        assert!(d.join("r1").join(file.as_str().unwrap()).is_file(), "{file}");
    }
}

#[test]
fn report_subcommand_rerenders_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_corpus(d);
    let printed = ok(&botnet(&["run", "--input", "corpus.jsonl", "--out", "run"], d));
    let rendered = ok(&botnet(&["report", "--dir", "run"], d));
    assert_eq!(rendered, fs::read_to_string(d.join("run/report.md")).unwrap());
    assert_eq!(rendered, printed);
}

#[test]
fn empty_corpus_fails_at_ingest_with_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = botnet(&["run", "--input", "empty.jsonl", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ingest stage failed"), "{}", stderr(&out));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_corpus(d);
    let out = botnet(&["run", "--input", "corpus.jsonl", "--k", "0"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("graphs stage failed"));
    assert_eq!(botnet(&["run", "--input", "corpus.jsonl", "--direction", "sideways"], d).status.code(), Some(1));
    assert_eq!(botnet(&["density"], d).status.code(), Some(1));
    fs::write(d.join("accounts.txt"), "someone\n").unwrap();
    let out = botnet(&["fetch-scores", "--accounts", "accounts.txt", "--cache", "s.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("BOTSCORE_ENDPOINT"));
}

#[test]
fn unreachable_scoring_service_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    fs::write(d.join("accounts.txt"), "someone\n").unwrap();
    let endpoint = format!("http://127.0.0.1:{port}/");
    let out = botnet(
        &["fetch-scores", "--accounts", "accounts.txt", "--cache", "s.jsonl", "--endpoint", &endpoint, "--max-retries", "0"],
        d,
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn source_filter_share_is_filtered_over_total() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_corpus(d);
    let text = fs::read_to_string(d.join("corpus.jsonl")).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let deck = rows.iter().filter(|r| r["source_client"] == "TweetDeck").count();
    assert!(deck > 0 && deck < rows.len());

    let out = ok(&botnet(&["ingest", "--input", "corpus.jsonl", "--source-client", "tweetdeck", "--out", "deck.jsonl"], d));
    let stats: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["filtered"]["tweet_count"].as_u64().unwrap() as usize, deck);
    assert_eq!(stats["tweet_share"].as_f64().unwrap(), deck as f64 / rows.len() as f64);
    assert_eq!(fs::read_to_string(d.join("deck.jsonl")).unwrap().lines().count(), deck);

    ok(&botnet(&["run", "--input", "corpus.jsonl", "--source-client", "TweetDeck", "--out", "run"], d));
    let report: Value = serde_json::from_slice(&fs::read(d.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["filtered"]["tweet_share"].as_f64().unwrap(), deck as f64 / rows.len() as f64);
}

#[test]
fn stage_subcommands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_corpus(d);
    ok(&botnet(&["graph", "--input", "corpus.jsonl", "--out", "g"], d));
    for f in ["mention.gexf", "coordination.gexf", "mention_edges.csv", "coordination_edges.csv"] {
        assert!(d.join("g").join(f).is_file(), "{f}");
    }

    let summary: Value = serde_json::from_str(&ok(&botnet(&["communities", "--input", "corpus.jsonl", "--out", "c"], d))).unwrap();
    assert!(summary["community_count"].as_u64().unwrap() >= 5);
    let partition = fs::read_to_string(d.join("c/partition.csv")).unwrap();
    assert_eq!(partition.lines().next(), Some("node,community"));

    let table = ok(&botnet(&["centrality", "--input", "corpus.jsonl", "--top", "3", "--out", "c"], d));
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().next().unwrap().trim_end().ends_with(" 1.0"));
    assert!(fs::read_to_string(d.join("c/centrality.csv")).unwrap().starts_with("account,score\n"));

    let signals = ok(&botnet(&["signals", "--input", "corpus.jsonl", "--out", "s"], d));
    assert!(signals.lines().count() >= 6);
    assert!(d.join("s/signals.json").is_file());
}

#[test]
fn density_subcommand_classifies_each_pair() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines = String::new();
    for i in 0..120 {
        let v = if i % 2 == 0 { 0.15 } else { 0.85 } + 0.001 * (i % 7) as f64;
        lines.push_str(&format!(
            "{{\"account\":\"a{i}\",\"content\":{v},\"sentiment\":{v},\"network\":{v},\"friend\":{v},\"temporal\":{v},\"user\":{v},\"overall\":{v},\"overall_universal\":{v},\"scale\":1.0,\"raw\":null,\"fetched_at\":\"2018-01-01T00:00:00Z\"}}\n"
        ));
    }
    fs::write(d.join("scores.jsonl"), lines).unwrap();
    let out = ok(&botnet(&["density", "--cache", "scores.jsonl", "--pairs", "content:sentiment,network:friend", "--grid", "64", "--out", "k"], d));
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().all(|l| l.contains("bimodal")), "{out}");
    let grid = fs::read_to_string(d.join("k/kde_content_sentiment.csv")).unwrap();
    assert_eq!(grid.lines().count(), 64);
}

#[test]
fn csv_input_with_custom_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("t.csv"),
        "tid,user,when,source,body\n1,ana,2018-01-01T00:00:00Z,TweetDeck,@bo hi\n2,bo,2018-01-01T00:00:05Z,Twitter Web Client,@ana yo\n",
    )
    .unwrap();
    let out = ok(&botnet(
        &["ingest", "--input", "t.csv", "--column", "id=tid", "--column", "screen_name=user", "--column", "created=when", "--column", "text=body"],
        d,
    ));
    let stats: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["dataset"]["tweet_count"], 2);
    assert_eq!(stats["dataset"]["mention_count"], 2);
    assert_eq!(botnet(&["ingest", "--input", "t.csv", "--column", "bogus=x"], d).status.code(), Some(1));
}
