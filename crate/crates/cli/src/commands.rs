// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use botnet_core::bot_scoring::{load_cache, store_cache, ScoreFetcher, SystemClock, UreqTransport};
use botnet_core::centrality::{eigenvector_centrality_with, rank_accounts, render_ranking_table, CentralityOptions};
use botnet_core::community::louvain;
use botnet_core::density::{bimodality_report, write_grid_files};
use botnet_core::export::{
    export_gexf, write_edge_list, write_json, write_partition_csv, write_ranking_csv, write_signal_csv, NodeAttributes,
    PartitionSummary,
};
use botnet_core::graphs::{build_coordination_graph, build_mention_graph, graph_stats};
use botnet_core::ingest::{dataset_stats, write_jsonl, Dataset};
use botnet_core::pipeline::{
    apply_filters, read_dataset, render_markdown, run_pipeline, summarize_pair, GraphChoice, PipelineConfig,
    PipelineReport,
};
use botnet_core::signals::{account_creation_dates, detect_creation_batches, detect_name_clusters, signal_report};
use botnet_core::synth::{generate, SynthConfig};
use botnet_core::weighted::WeightedGraph;
use botnet_core::{Error, ErrorKind, Result};
use serde_json::json;

use crate::args::{Command, GraphArgs, InputArgs, RunArgs, SynthArgs};

/// A failed command, tagged with the stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl Failure {
    fn at(stage: &'static str, e: Error) -> Self {
        Failure {
            stage,
            kind: e.kind(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Network => 3,
        }
    }
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Graph { .. } => "graphs",
            Command::Communities { .. } => "communities",
            Command::Centrality { .. } => "centrality",
            Command::FetchScores { .. } => "scores",
            Command::Density { .. } => "density",
            Command::Signals { .. } => "signals",
            Command::Synth(_) => "synth",
            Command::Report { .. } => "report",
            Command::Run(_) => "run",
        }
    }
}

pub fn execute(cmd: Command) -> std::result::Result<(), Failure> {
    let stage = cmd.stage();
    match cmd {
        Command::Run(args) => run(&args),
        other => dispatch(other).map_err(|e| Failure::at(stage, e)),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { input, out } => ingest(&input, out.as_deref()),
        Command::Graph { input, projection, out } => {
            let (_, working) = load(&input)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let mention = build_mention_graph(&working);
            let coord = build_coordination_graph(&working, projection.bucket_width, projection.k)?;
            for (name, g) in [("mention", &mention.graph), ("coordination", &coord.graph)] {
                if g.is_empty() {
                    eprintln!("{name} graph is empty; no export written");
                    continue;
                }
                export_gexf(g, NodeAttributes::default(), &out.join(format!("{name}.gexf")))?;
                write_edge_list(g, &out.join(format!("{name}_edges.csv")))?;
            }
            print_json(&json!({
                "mention": graph_stats(&mention.graph),
                "coordination": graph_stats(&coord.graph),
                "self_mentions": mention.self_mentions,
                "coordination_event_groups": coord.event_groups,
            }))
        }
        Command::Communities { input, graph, community, out } => {
            let (_, working) = load(&input)?;
            let g = chosen_graph(&working, &graph)?;
            let p = louvain(&g, community.resolution, community.seed)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_partition_csv(&p, &out.join("partition.csv"))?;
            let summary = PartitionSummary::of(&p);
            write_json(&summary, &out.join("communities.json"))?;
            print_json(&summary)
        }
        Command::Centrality { input, graph, centrality, out } => {
            let (_, working) = load(&input)?;
            let g = chosen_graph(&working, &graph)?;
            let opts = CentralityOptions {
                direction: centrality.direction.unwrap_or(graph.graph.default_direction()),
                tol: centrality.tol,
                max_iter: centrality.max_iter,
                per_component: centrality.per_component,
                ..Default::default()
            };
            let scores = eigenvector_centrality_with(&g, &opts)?;
            if !scores.converged {
                eprintln!("power iteration stopped after {} iterations without converging", scores.iterations);
            }
            let ranking = rank_accounts(&scores, g.node_count())?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_ranking_csv(&ranking, &out.join("centrality.csv"))?;
            let top: Vec<(String, f64)> = ranking.into_iter().take(centrality.top.max(1)).collect();
            emit(&render_ranking_table(&top));
            Ok(())
        }
        Command::FetchScores { accounts, cache, fetch } => {
            let names = read_account_list(&accounts)?;
            let mut store = load_cache(&cache)?;
            let wanted: Vec<String> = names.into_iter().filter(|n| store.get(n).is_none()).collect();
            if wanted.is_empty() {
                return print_json(&json!({ "requested": 0, "cached": store.len() }));
            }
            let mut fetcher = ScoreFetcher::new(UreqTransport::default(), SystemClock::default(), fetch.config()?)?;
            let outcome = fetcher.fetch(&wanted, &mut store)?;
            store_cache(&store, &cache)?;
            if outcome.fetched.is_empty() {
                let first = &outcome.unavailable[0];
                return Err(Error::Network(format!(
                    "no scores fetched for {} accounts; {}: {}",
                    wanted.len(),
                    first.account,
                    first.reason
                )));
            }
            print_json(&json!({
                "requested": wanted.len(),
                "fetched": outcome.fetched.len(),
                "retries": outcome.retries,
                "unavailable": outcome.unavailable,
                "cached": store.len(),
            }))
        }
        Command::Density { cache, density, out } => {
            let store = load_cache(&cache)?;
            if store.is_empty() {
                return Err(Error::data(format!("{} holds no score records", cache.display())));
            }
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let results = bimodality_report(&store, &density.pairs, &density.params())?;
            for r in &results {
                write_grid_files(&out, r)?;
            }
            let summaries: Vec<_> = results.iter().map(summarize_pair).collect();
            write_json(&summaries, &out.join("density.json"))?;
            let mut text = String::new();
            for s in &summaries {
                let line = match (&s.classification, &s.error) {
                    (Some(c), _) => format!("{:<20} {:<10} modes={} n={}\n", s.pair, c, s.modes, s.points),
                    (None, Some(e)) => format!("{:<20} skipped: {e}\n", s.pair),
                    (None, None) => format!("{:<20} skipped\n", s.pair),
                };
                text.push_str(&line);
            }
            emit(&text);
            Ok(())
        }
        Command::Signals { input, graph, community, signals, out } => {
            let (_, working) = load(&input)?;
            let g = chosen_graph(&working, &graph)?;
            let p = louvain(&g, community.resolution, community.seed)?;
            let accounts = account_creation_dates(&working);
            let names: Vec<String> = accounts.iter().map(|a| a.0.clone()).collect();
            let batches = detect_creation_batches(&accounts, signals.batch_window_days, signals.min_batch)?;
            let clusters = detect_name_clusters(&names, signals.min_token_len, signals.min_cluster)?;
            let rows = signal_report(&batches.batches, &clusters, &p);
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_signal_csv(&rows, &out.join("signals.csv"))?;
            write_json(
                &json!({ "batches": batches.batches, "name_clusters": clusters }),
                &out.join("signals.json"),
            )?;
            let mut text = format!("{:>9} {:>5} {:>6} {:>6} {:>8}  token\n", "community", "size", "batch", "name", "combined");
            for r in &rows {
                text.push_str(&format!(
                    "{:>9} {:>5} {:>6.3} {:>6.3} {:>8.3}  {}\n",
                    r.community,
                    r.size,
                    r.batch_fraction,
                    r.name_fraction,
                    r.combined,
                    r.best_token.as_deref().unwrap_or("-")
                ));
            }
            emit(&text);
            Ok(())
        }
        Command::Synth(args) => synth(&args),
        Command::Report { dir } => {
            let path = dir.join("report.json");
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let report: PipelineReport = serde_json::from_str(&text)
                .map_err(|e| Error::data(format!("{} is not a pipeline report: {e}", path.display())))?;
            emit(&render_markdown(&report));
            Ok(())
        }
        Command::Run(_) => unreachable!("handled by execute"),
    }
}

fn load(input: &InputArgs) -> Result<(Dataset, Dataset)> {
    let (full, parse) = read_dataset(&input.input, input.format(), &input.column_map())?;
    if parse.skipped() > 0 {
        eprintln!(
            "skipped {} records ({} unparseable, {} missing fields)",
            parse.skipped(),
            parse.unparseable,
            parse.missing_fields
        );
    }
    if full.is_empty() {
        return Err(Error::data(format!("{} contains no usable tweets", input.input.display())));
    }
    let working = apply_filters(&full, input.source_client.as_deref(), input.window_start, input.window_end)?;
    Ok((full, working))
}

fn chosen_graph(d: &Dataset, args: &GraphArgs) -> Result<WeightedGraph> {
    let g = match args.graph {
        GraphChoice::Coordination => {
            build_coordination_graph(d, args.projection.bucket_width, args.projection.k)?.graph
        }
        GraphChoice::Mention => build_mention_graph(d).graph,
    };
    if g.edge_count() == 0 {
        return Err(Error::data(format!("the {} graph has no edges", args.graph)));
    }
    Ok(g)
}

fn ingest(input: &InputArgs, out: Option<&Path>) -> Result<()> {
    let (full, working) = load(input)?;
    let full_stats = dataset_stats(&full);
    let filtered = dataset_stats(&working);
    if let Some(path) = out {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write_jsonl(&working, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    let share = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    print_json(&json!({
        "dataset": full_stats,
        "filtered": filtered,
        "tweet_share": share(filtered.tweet_count, full_stats.tweet_count),
        "mention_share": share(filtered.mention_count, full_stats.mention_count),
    }))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_teams: args.teams,
        team_size: args.team_size,
        waves_per_team: args.waves,
        jitter_seconds: args.jitter,
        n_background_accounts: args.background_accounts,
        background_tweets: args.background_tweets,
        seed: args.seed,
        creation_window_days: args.creation_window_days.clone(),
        ..SynthConfig::default()
    };
    let (corpus, truth) = generate(&cfg)?;
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut w = BufWriter::new(file);
    write_jsonl(&corpus, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&args.out, e))?;
    let truth_path = args.truth.clone().unwrap_or_else(|| args.out.with_extension("truth.json"));
    write_json(&truth, &truth_path)?;
    print_json(&json!({
        "corpus": args.out,
        "truth": truth_path,
        "tweets": corpus.len(),
        "counts": truth.counts,
    }))
}

fn run(args: &RunArgs) -> std::result::Result<(), Failure> {
    let mut cfg = PipelineConfig::new(&args.input.input, &args.out);
    cfg.format = args.input.format();
    cfg.columns = args.input.column_map();
    cfg.source_client = args.input.source_client.clone();
    cfg.window_start = args.input.window_start;
    cfg.window_end = args.input.window_end;
    cfg.bucket_width = args.graph.projection.bucket_width;
    cfg.min_shared = args.graph.projection.k;
    cfg.graph = args.graph.graph;
    cfg.resolution = args.community.resolution;
    cfg.seed = args.community.seed;
    cfg.direction = args.centrality.direction;
    cfg.tol = args.centrality.tol;
    cfg.max_iter = args.centrality.max_iter;
    cfg.per_component = args.centrality.per_component;
    cfg.top_n = args.centrality.top;
    cfg.score_cache = args.cache.clone();
    if args.fetch {
        cfg.fetch = Some(args.fetch_args.config().map_err(|e| Failure::at("setup", e))?);
    }
    cfg.pairs = args.density.pairs.clone();
    cfg.density = args.density.params();
    cfg.batch_window_days = args.signals.batch_window_days;
    cfg.min_batch = args.signals.min_batch;
    cfg.min_token_len = args.signals.min_token_len;
    cfg.min_cluster = args.signals.min_cluster;
    cfg.truth = args.truth.clone();
    let report = run_pipeline(&cfg).map_err(|e| Failure {
        stage: e.stage,
        kind: e.kind(),
        message: e.error.to_string(),
    })?;
    emit(&render_markdown(&report));
    Ok(())
}

fn read_account_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut names = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let first = line.split(',').next().unwrap_or("").trim().trim_matches('"');
        if first.is_empty() || (i == 0 && line.contains(',')) {
            continue;
        }
        if !names.iter().any(|n: &String| n.eq_ignore_ascii_case(first)) {
            names.push(first.to_string());
        }
    }
    if names.is_empty() {
        return Err(Error::data(format!("{} lists no accounts", path.display())));
    }
    Ok(names)
}

fn print_json<T: serde::Serialize + ?Sized>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::data(e.to_string()))?;
    emit(&format!("{text}\n"));
    Ok(())
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
