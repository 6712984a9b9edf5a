// SPDX-License-Identifier: Apache-2.0

//! End-to-end analysis: ingest, optional source and window filters, mention
//! and coordination graphs, communities, centrality, bot-score densities and
//! account signals, written as artifacts plus `report.json`/`report.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::bot_scoring::{
    load_cache, store_cache, Axis, FetchConfig, ScoreCache, ScoreFetcher, SystemClock, UreqTransport, DEFAULT_PAIRS,
};
use crate::centrality::{
    eigenvector_centrality_with, format_score, rank_accounts, render_ranking_table, CentralityOptions, Direction,
    DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use crate::community::{adjusted_rand_index, community_sizes, louvain, Partition, DEFAULT_RESOLUTION};
use crate::density::{bimodality_report, write_grid_files, DensityParams, Modality, PairResult};
use crate::error::{Error, ErrorKind, Result};
use crate::export::{export_gexf, write_json, write_partition_csv, write_ranking_csv, write_signal_csv, NodeAttributes};
use crate::graphs::{build_coordination_graph, build_mention_graph, graph_stats, GraphStats, DEFAULT_BUCKET_WIDTH, DEFAULT_MIN_SHARED};
use crate::ingest::{
    dataset_stats, filter_by_source, filter_by_window, parse_csv, parse_jsonl, ColumnMap, Dataset, DatasetStats, ParseReport,
};
use crate::signals::{
    account_creation_dates, detect_creation_batches, detect_name_clusters, signal_report, CommunitySignal, DEFAULT_MIN_BATCH, DEFAULT_MIN_CLUSTER,
    DEFAULT_MIN_TOKEN_LEN, DEFAULT_WINDOW_DAYS,
};
use crate::synth::GroundTruth;
use crate::weighted::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Jsonl,
    Csv,
}

impl InputFormat {
    /// `.csv` files are CSV, everything else JSON-lines.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            _ => Err(Error::config(format!("unknown input format '{s}' (expected jsonl or csv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphChoice {
    #[default]
    Coordination,
    Mention,
}

impl GraphChoice {
    pub fn default_direction(self) -> Direction {
        match self {
            GraphChoice::Coordination => Direction::Undirected,
            GraphChoice::Mention => Direction::In,
        }
    }
}

impl std::str::FromStr for GraphChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coordination" | "co-retweet" => Ok(GraphChoice::Coordination),
            "mention" | "mentions" => Ok(GraphChoice::Mention),
            _ => Err(Error::config(format!("unknown graph '{s}' (expected coordination or mention)"))),
        }
    }
}

impl fmt::Display for GraphChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphChoice::Coordination => "coordination",
            GraphChoice::Mention => "mention",
        })
    }
}

pub fn read_dataset(path: &Path, format: InputFormat, columns: &ColumnMap) -> Result<(Dataset, ParseReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        InputFormat::Jsonl => parse_jsonl(file)?,
        InputFormat::Csv => parse_csv(file, columns)?,
    };
    let mut dataset = parsed.dataset;
    dataset.set_provenance(path.display().to_string());
    Ok((dataset, parsed.report))
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: not a ground-truth file: {e}", path.display())))
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub columns: ColumnMap,
    pub out_dir: PathBuf,
    pub source_client: Option<String>,
    pub window_start: Option<DateTime<Utc>>,
    pub window_end: Option<DateTime<Utc>>,
    pub bucket_width: i64,
    pub min_shared: u64,
    pub graph: GraphChoice,
    pub resolution: f64,
    pub seed: u64,
    /// Defaults per graph: undirected for coordination, in for mention.
    pub direction: Option<Direction>,
    pub tol: f64,
    pub max_iter: usize,
    pub per_component: bool,
    pub top_n: usize,
    pub score_cache: Option<PathBuf>,
    /// Fetch missing scores for community-graph accounts before density.
    pub fetch: Option<FetchConfig>,
    pub pairs: Vec<(Axis, Axis)>,
    pub density: DensityParams,
    pub batch_window_days: i64,
    pub min_batch: usize,
    pub min_token_len: usize,
    pub min_cluster: usize,
    pub truth: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        let input = input.into();
        PipelineConfig {
            format: InputFormat::infer(&input),
            input,
            columns: ColumnMap::default(),
            out_dir: out_dir.into(),
            source_client: None,
            window_start: None,
            window_end: None,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            min_shared: DEFAULT_MIN_SHARED,
            graph: GraphChoice::default(),
            resolution: DEFAULT_RESOLUTION,
            seed: 0,
            direction: None,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            per_component: false,
            top_n: 10,
            score_cache: None,
            fetch: None,
            pairs: DEFAULT_PAIRS.to_vec(),
            density: DensityParams::default(),
            batch_window_days: DEFAULT_WINDOW_DAYS,
            min_batch: DEFAULT_MIN_BATCH,
            min_token_len: DEFAULT_MIN_TOKEN_LEN,
            min_cluster: DEFAULT_MIN_CLUSTER,
            truth: None,
        }
    }

    pub fn effective_direction(&self) -> Direction {
        self.direction.unwrap_or(self.graph.default_direction())
    }
}

/// Every effective parameter, as recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub input: String,
    pub format: InputFormat,
    pub source_client: Option<String>,
    pub window_start: Option<DateTime<Utc>>,
    pub window_end: Option<DateTime<Utc>>,
    pub bucket_width: i64,
    pub min_shared: u64,
    pub graph: GraphChoice,
    pub resolution: f64,
    pub seed: u64,
    pub direction: Direction,
    pub tol: f64,
    pub max_iter: usize,
    pub per_component: bool,
    pub top_n: usize,
    pub score_cache: Option<String>,
    pub fetch_endpoint: Option<String>,
    pub fetch_rate_limit: Option<u32>,
    pub pairs: Vec<String>,
    pub bandwidth: String,
    pub grid: usize,
    pub min_density_fraction: f64,
    pub merge_radius: Option<f64>,
    pub fallback_bandwidth: f64,
    pub batch_window_days: i64,
    pub min_batch: usize,
    pub min_token_len: usize,
    pub min_cluster: usize,
    pub truth: Option<String>,
}

impl ReportParameters {
    fn of(c: &PipelineConfig) -> Self {
        ReportParameters {
            input: c.input.display().to_string(),
            format: c.format,
            source_client: c.source_client.clone(),
            window_start: c.window_start,
            window_end: c.window_end,
            bucket_width: c.bucket_width,
            min_shared: c.min_shared,
            graph: c.graph,
            resolution: c.resolution,
            seed: c.seed,
            direction: c.effective_direction(),
            tol: c.tol,
            max_iter: c.max_iter,
            per_component: c.per_component,
            top_n: c.top_n,
            score_cache: c.score_cache.as_ref().map(|p| p.display().to_string()),
            fetch_endpoint: c.fetch.as_ref().map(|f| f.endpoint.clone()),
            fetch_rate_limit: c.fetch.as_ref().map(|f| f.rate_limit),
            pairs: c.pairs.iter().map(|(x, y)| format!("{x}:{y}")).collect(),
            bandwidth: c.density.bandwidth.to_string(),
            grid: c.density.grid,
            min_density_fraction: c.density.min_density_fraction,
            merge_radius: c.density.merge_radius,
            fallback_bandwidth: c.density.fallback_bandwidth,
            batch_window_days: c.batch_window_days,
            min_batch: c.min_batch,
            min_token_len: c.min_token_len,
            min_cluster: c.min_cluster,
            truth: c.truth.as_ref().map(|p| p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub source_client: Option<String>,
    pub window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    pub dataset: DatasetStats,
    /// Filtered tweets over all tweets.
    pub tweet_share: Option<f64>,
    /// Mentions in filtered tweets over all mentions.
    pub mention_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSection {
    pub mention: GraphStats,
    pub coordination: GraphStats,
    pub mention_filtered: Option<GraphStats>,
    pub coordination_filtered: Option<GraphStats>,
    pub self_mentions: usize,
    pub coordination_event_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySection {
    pub graph: GraphChoice,
    pub count: usize,
    pub modularity: f64,
    pub level_modularity: Vec<f64>,
    /// `(community, size)`, largest first.
    pub sizes: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub account: String,
    pub score: f64,
    pub formatted: String,
    pub community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralitySection {
    pub graph: GraphChoice,
    pub direction: Direction,
    pub converged: bool,
    pub iterations: usize,
    pub top: Vec<RankRow>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair: String,
    pub points: usize,
    pub classification: Option<Modality>,
    pub modes: usize,
    pub separation: Option<f64>,
    pub bandwidth: Option<(f64, f64)>,
    pub bandwidth_fallback: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSection {
    pub cached_accounts: usize,
    pub fetched: usize,
    pub unavailable: usize,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySection {
    pub scores: ScoreSection,
    pub pairs: Vec<PairSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSection {
    pub accounts: usize,
    pub accounts_without_creation_date: usize,
    pub creation_batches: usize,
    pub batched_accounts: usize,
    pub name_clusters: usize,
    pub communities: Vec<CommunitySignal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub teams: usize,
    pub planted_accounts: usize,
    /// Planted accounts present in the community graph; ARI covers these.
    pub planted_in_graph: usize,
    pub adjusted_rand_index: Option<f64>,
}

/// Published reference counts for context; the corpus behind them is not
/// available, so they are never compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCounts {
    pub note: String,
    pub tweets_mentioning_target: u64,
    pub source_filtered_tweets: u64,
    pub mention_graph_nodes: u64,
    pub mention_graph_edges: u64,
    pub mention_graph_communities: u64,
    pub filtered_graph_nodes: u64,
    pub filtered_graph_communities: u64,
}

impl Default for ReferenceCounts {
    fn default() -> Self {
        ReferenceCounts {
            note: "published counts from a non-public archive; context only, not reproducible here".to_string(),
            tweets_mentioning_target: 41_288,
            source_filtered_tweets: 22_519,
            mention_graph_nodes: 26_363,
            mention_graph_edges: 41_255,
            mention_graph_communities: 4_108,
            filtered_graph_nodes: 3_767,
            filtered_graph_communities: 124,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub parameters: ReportParameters,
    pub parse: ParseReport,
    pub dataset: DatasetStats,
    pub filtered: Option<FilterSummary>,
    pub graphs: GraphSection,
    pub communities: CommunitySection,
    pub centrality: CentralitySection,
    pub density: Option<DensitySection>,
    pub signals: SignalSection,
    pub validation: Option<Validation>,
    /// Artifact name → file name inside the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub references: ReferenceCounts,
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl StageError {
    pub fn kind(&self) -> ErrorKind {
        self.error.kind()
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

trait AtStage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn share(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| part as f64 / whole as f64)
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl Artifacts<'_> {
    fn path(&mut self, key: &str, file: &str) -> PathBuf {
        self.files.insert(key.to_string(), file.to_string());
        self.dir.join(file)
    }
}

/// Runs every stage and writes all artifacts into `cfg.out_dir`. Artifacts
/// of completed stages stay on disk when a later stage fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> std::result::Result<PipelineReport, StageError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(&cfg.out_dir, e))
        .at("setup")?;
    let mut art = Artifacts {
        dir: &cfg.out_dir,
        files: BTreeMap::new(),
    };

    let (full, parse) = read_dataset(&cfg.input, cfg.format, &cfg.columns).at("ingest")?;
    if full.is_empty() {
        return Err(Error::data(format!(
            "{} contains no usable tweets ({} unparseable, {} missing fields)",
            cfg.input.display(),
            parse.unparseable,
            parse.missing_fields
        )))
        .at("ingest");
    }
    let full_stats = dataset_stats(&full);

    let filtering = cfg.source_client.is_some() || cfg.window_start.is_some() || cfg.window_end.is_some();
    let working = apply_filters(&full, cfg.source_client.as_deref(), cfg.window_start, cfg.window_end).at("filter")?;
    let filtered = filtering.then(|| {
        let s = dataset_stats(&working);
        FilterSummary {
            source_client: cfg.source_client.clone(),
            window: working.window(),
            tweet_share: share(s.tweet_count, full_stats.tweet_count),
            mention_share: share(s.mention_count, full_stats.mention_count),
            dataset: s,
        }
    });

    let mention_full = build_mention_graph(&full);
    let coord_full = build_coordination_graph(&full, cfg.bucket_width, cfg.min_shared).at("graphs")?;
    let (mention, coord) = if filtering {
        (
            build_mention_graph(&working),
            build_coordination_graph(&working, cfg.bucket_width, cfg.min_shared).at("graphs")?,
        )
    } else {
        (mention_full.clone(), coord_full.clone())
    };
    let graphs = GraphSection {
        mention: graph_stats(&mention_full.graph),
        coordination: graph_stats(&coord_full.graph),
        mention_filtered: filtering.then(|| graph_stats(&mention.graph)),
        coordination_filtered: filtering.then(|| graph_stats(&coord.graph)),
        self_mentions: mention.self_mentions,
        coordination_event_groups: coord.event_groups,
    };

    let chosen: &WeightedGraph = match cfg.graph {
        GraphChoice::Coordination => &coord.graph,
        GraphChoice::Mention => &mention.graph,
    };
    if chosen.edge_count() == 0 {
        let hint = match cfg.graph {
            GraphChoice::Coordination => "; lower --k, widen --bucket-width or use the mention graph",
            GraphChoice::Mention => "",
        };
        return Err(Error::data(format!("the {} graph has no edges{hint}", cfg.graph))).at("communities");
    }
    let partition = louvain(chosen, cfg.resolution, cfg.seed).at("communities")?;
    write_partition_csv(&partition, &art.path("partition", "partition.csv")).at("communities")?;
    let communities = CommunitySection {
        graph: cfg.graph,
        count: partition.community_count(),
        modularity: partition.modularity,
        level_modularity: partition.level_modularity.clone(),
        sizes: community_sizes(&partition),
    };

    let opts = CentralityOptions {
        direction: cfg.effective_direction(),
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        per_component: cfg.per_component,
        ..Default::default()
    };
    if cfg.top_n < 1 {
        return Err(Error::config("top_n must be >= 1")).at("centrality");
    }
    let centrality = eigenvector_centrality_with(chosen, &opts).at("centrality")?;
    let full_rank = rank_accounts(&centrality, chosen.node_count().max(1)).at("centrality")?;
    write_ranking_csv(&full_rank, &art.path("centrality", "centrality.csv")).at("centrality")?;
    let top: Vec<(String, f64)> = full_rank.iter().take(cfg.top_n).cloned().collect();
    let lookup = partition.lookup();
    let centrality_section = CentralitySection {
        graph: cfg.graph,
        direction: opts.direction,
        converged: centrality.converged,
        iterations: centrality.iterations,
        top: top
            .iter()
            .map(|(a, s)| RankRow {
                account: a.clone(),
                score: *s,
                formatted: format_score(*s),
                community: lookup.get(a.as_str()).copied(),
            })
            .collect(),
        table: render_ranking_table(&top),
    };

    let mut cache: Option<ScoreCache> = None;
    let mut score_section = ScoreSection {
        cached_accounts: 0,
        fetched: 0,
        unavailable: 0,
        retries: 0,
    };
    if let Some(path) = &cfg.score_cache {
        cache = Some(load_cache(path).at("scores")?);
    }
    if let Some(fc) = &cfg.fetch {
        let mut c = cache.take().unwrap_or_default();
        let wanted: Vec<String> = chosen
            .names()
            .iter()
            .filter(|n| c.get(n).is_none())
            .cloned()
            .collect();
        let mut fetcher = ScoreFetcher::new(UreqTransport::default(), SystemClock::default(), fc.clone()).at("scores")?;
        let outcome = fetcher.fetch(&wanted, &mut c).at("scores")?;
        score_section.fetched = outcome.fetched.len();
        score_section.unavailable = outcome.unavailable.len();
        score_section.retries = outcome.retries;
        let target = cfg
            .score_cache
            .clone()
            .unwrap_or_else(|| art.path("scores", "scores.jsonl"));
        store_cache(&c, &target).at("scores")?;
        cache = Some(c);
    }

    let density = match &cache {
        Some(c) if !c.is_empty() => {
            score_section.cached_accounts = c.len();
            let results = bimodality_report(c, &cfg.pairs, &cfg.density).at("density")?;
            let mut pairs = Vec::new();
            for r in &results {
                if write_grid_files(&cfg.out_dir, r).at("density")?.is_some() {
                    let stem = r.file_stem();
                    art.files.insert(stem.clone(), format!("{stem}.csv"));
                    art.files.insert(format!("{stem}_meta"), format!("{stem}.json"));
                }
                pairs.push(summarize_pair(r));
            }
            write_json(&pairs, &art.path("density", "density.json")).at("density")?;
            Some(DensitySection {
                scores: score_section,
                pairs,
            })
        }
        _ => None,
    };

    let accounts = account_creation_dates(&working);
    let names: Vec<String> = accounts.iter().map(|a| a.0.clone()).collect();
    let batches = detect_creation_batches(&accounts, cfg.batch_window_days, cfg.min_batch).at("signals")?;
    let clusters = detect_name_clusters(&names, cfg.min_token_len, cfg.min_cluster).at("signals")?;
    let per_community = signal_report(&batches.batches, &clusters, &partition);
    write_signal_csv(&per_community, &art.path("signals", "signals.csv")).at("signals")?;
    write_json(
        &serde_json::json!({ "batches": batches.batches, "name_clusters": clusters }),
        &art.path("signals_detail", "signals.json"),
    )
    .at("signals")?;
    let signals = SignalSection {
        accounts: accounts.len(),
        accounts_without_creation_date: batches.skipped,
        creation_batches: batches.batches.len(),
        batched_accounts: batches.batches.iter().map(|b| b.accounts.len()).sum(),
        name_clusters: clusters.len(),
        communities: per_community,
    };

    let validation = match &cfg.truth {
        Some(path) => Some(validate(&read_truth(path).at("validation")?, &partition).at("validation")?),
        None => None,
    };

    let scores_ref = cache.as_ref();
    export_gexf(
        &mention.graph,
        NodeAttributes {
            partition: (cfg.graph == GraphChoice::Mention).then_some(&partition),
            centrality: (cfg.graph == GraphChoice::Mention).then_some(&centrality),
            scores: scores_ref,
        },
        &art.path("mention_gexf", "mention.gexf"),
    )
    .at("export")?;
    if coord.graph.is_empty() {
        art.files.remove("coordination_gexf");
    } else {
        export_gexf(
            &coord.graph,
            NodeAttributes {
                partition: (cfg.graph == GraphChoice::Coordination).then_some(&partition),
                centrality: (cfg.graph == GraphChoice::Coordination).then_some(&centrality),
                scores: scores_ref,
            },
            &art.path("coordination_gexf", "coordination.gexf"),
        )
        .at("export")?;
    }

    art.files.insert("report_json".into(), "report.json".into());
    art.files.insert("report_md".into(), "report.md".into());
    let report = PipelineReport {
        parameters: ReportParameters::of(cfg),
        parse,
        dataset: full_stats,
        filtered,
        graphs,
        communities,
        centrality: centrality_section,
        density,
        signals,
        validation,
        artifacts: art.files,
        references: ReferenceCounts::default(),
    };
    write_json(&report, &cfg.out_dir.join("report.json")).at("report")?;
    let md_path = cfg.out_dir.join("report.md");
    std::fs::write(&md_path, render_markdown(&report))
        .map_err(|e| Error::io(&md_path, e))
        .at("report")?;
    Ok(report)
}

/// Report row for one analysed score pair.
pub fn summarize_pair(r: &PairResult) -> PairSummary {
    match &r.outcome {
        Ok(a) => PairSummary {
            pair: format!("{}:{}", r.x, r.y),
            points: r.points,
            classification: Some(a.modes.classification),
            modes: a.modes.modes.len(),
            separation: a.modes.separation,
            bandwidth: Some(a.grid.bandwidth),
            bandwidth_fallback: a.bandwidth_fallback,
            error: None,
        },
        Err(e) => PairSummary {
            pair: format!("{}:{}", r.x, r.y),
            points: r.points,
            classification: None,
            modes: 0,
            separation: None,
            bandwidth: None,
            bandwidth_fallback: false,
            error: Some(e.clone()),
        },
    }
}

/// Source-client and time-window filtering. An open window bound defaults
/// to the collection window, or to the dataset's own extent.
pub fn apply_filters(
    full: &Dataset,
    source_client: Option<&str>,
    window_start: Option<DateTime<Utc>>,
    window_end: Option<DateTime<Utc>>,
) -> Result<Dataset> {
    let mut working = full.clone();
    if let Some(client) = source_client {
        working = filter_by_source(&working, client)?;
    }
    if window_start.is_some() || window_end.is_some() {
        let (ws, we) = full.window().unwrap_or_else(|| {
            let first = full.tweets().iter().map(|t| t.created_at).min().unwrap_or_default();
            let last = full.tweets().iter().map(|t| t.created_at).max().unwrap_or_default();
            (first, last)
        });
        working = filter_by_window(&working, window_start.unwrap_or(ws), window_end.unwrap_or(we))?;
    }
    if working.is_empty() {
        return Err(Error::data("no tweets left after filtering"));
    }
    Ok(working)
}

/// ARI between the partition and the planted teams, over planted accounts
/// present in the partition.
pub fn validate(truth: &GroundTruth, partition: &Partition) -> Result<Validation> {
    let lookup = partition.lookup();
    let mut team_index: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut found, mut predicted) = (Vec::new(), Vec::new());
    let mut planted = 0;
    for (account, label) in &truth.labels {
        if !truth.is_planted(account) {
            continue;
        }
        planted += 1;
        if let Some(&c) = lookup.get(account.as_str()) {
            let next = team_index.len();
            found.push(*team_index.entry(label.as_str()).or_insert(next));
            predicted.push(c);
        }
    }
    let ari = if found.len() >= 2 {
        Some(adjusted_rand_index(&found, &predicted)?)
    } else {
        None
    };
    Ok(Validation {
        teams: truth.teams.len(),
        planted_accounts: planted,
        planted_in_graph: found.len(),
        adjusted_rand_index: ari,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn stats_row(label: &str, s: &GraphStats) -> String {
    format!(
        "| {label} | {} | {} | {} | {} / {} / {} |\n",
        s.nodes, s.edges, s.weight_sum, s.degree_p50, s.degree_p90, s.degree_p99
    )
}

pub fn render_markdown(r: &PipelineReport) -> String {
    let p = &r.parameters;
    let mut s = String::new();
    s.push_str("# Coordination analysis report\n\n");
    s.push_str(&format!("Input: `{}` ({:?})\n\n", p.input, p.format));

    s.push_str("## Dataset\n\n");
    let d = &r.dataset;
    s.push_str(&format!(
        "- tweets: {}\n- distinct authors: {}\n- source clients: {}\n- retweets: {} (share {})\n- mentions: {}\n",
        d.tweet_count,
        d.distinct_authors,
        d.distinct_sources,
        d.retweet_count,
        opt(d.retweet_share),
        d.mention_count
    ));
    s.push_str(&format!(
        "- skipped records: {} unparseable, {} missing fields, {} duplicates\n\n",
        r.parse.unparseable, r.parse.missing_fields, r.parse.duplicates
    ));
    if let Some(f) = &r.filtered {
        s.push_str("## Filter\n\n");
        if let Some(c) = &f.source_client {
            s.push_str(&format!("- source client: {c}\n"));
        }
        if let Some((a, b)) = f.window {
            s.push_str(&format!("- window: {a} to {b}\n"));
        }
        s.push_str(&format!(
            "- kept tweets: {} of {} (share {})\n- kept mentions: {} of {} (share {})\n\n",
            f.dataset.tweet_count,
            d.tweet_count,
            opt(f.tweet_share),
            f.dataset.mention_count,
            d.mention_count,
            opt(f.mention_share)
        ));
    }

    s.push_str("## Graphs\n\n| graph | nodes | edges | weight | degree p50 / p90 / p99 |\n|---|---|---|---|---|\n");
    s.push_str(&stats_row("mention", &r.graphs.mention));
    s.push_str(&stats_row("coordination", &r.graphs.coordination));
    if let Some(m) = &r.graphs.mention_filtered {
        s.push_str(&stats_row("mention (filtered)", m));
    }
    if let Some(c) = &r.graphs.coordination_filtered {
        s.push_str(&stats_row("coordination (filtered)", c));
    }
    s.push_str(&format!(
        "\nCoordination: bucket width {} s, k = {}, {} distinct (tweet, bucket) keys.\n\n",
        p.bucket_width, p.min_shared, r.graphs.coordination_event_groups
    ));

    let c = &r.communities;
    s.push_str(&format!(
        "## Communities ({} graph)\n\n{} communities, modularity {:.6} (resolution {}, seed {}).\n\n",
        c.graph, c.count, c.modularity, p.resolution, p.seed
    ));
    s.push_str("| community | size |\n|---|---|\n");
    for (id, size) in c.sizes.iter().take(20) {
        s.push_str(&format!("| {id} | {size} |\n"));
    }
    if c.sizes.len() > 20 {
        s.push_str(&format!("\n{} smaller communities omitted; see partition.csv.\n", c.sizes.len() - 20));
    }

    let e = &r.centrality;
    s.push_str(&format!(
        "\n## Eigenvector centrality ({} graph, direction {})\n\n",
        e.graph, e.direction
    ));
    if !e.converged {
        s.push_str(&format!("Warning: did not converge within {} iterations.\n\n", e.iterations));
    }
    s.push_str("```\n");
    s.push_str(&e.table);
    s.push_str("```\n\n");

    s.push_str("## Bot-score density\n\n");
    match &r.density {
        None => s.push_str("No score cache supplied; skipped.\n\n"),
        Some(den) => {
            s.push_str(&format!(
                "{} accounts scored. Bandwidth {}, grid {}, mode floor {} of max. The bimodality call is a heuristic reading of the density, not a statistical test.\n\n",
                den.scores.cached_accounts, p.bandwidth, p.grid, p.min_density_fraction
            ));
            s.push_str("| pair | points | classification | modes | separation |\n|---|---|---|---|---|\n");
            for pair in &den.pairs {
                let class = match (&pair.classification, &pair.error) {
                    (Some(m), _) => m.to_string(),
                    (None, Some(err)) => format!("error: {err}"),
                    _ => "n/a".to_string(),
                };
                s.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    pair.pair,
                    pair.points,
                    class,
                    pair.modes,
                    opt(pair.separation)
                ));
            }
            s.push('\n');
        }
    }

    let g = &r.signals;
    s.push_str(&format!(
        "## Account signals\n\n{} accounts ({} without creation date), {} creation batches covering {} accounts, {} name clusters.\n\n",
        g.accounts, g.accounts_without_creation_date, g.creation_batches, g.batched_accounts, g.name_clusters
    ));
    s.push_str("| community | size | batch fraction | name fraction | token | combined |\n|---|---|---|---|---|---|\n");
    for c in g.communities.iter().take(20) {
        s.push_str(&format!(
            "| {} | {} | {:.3} | {:.3} | {} | {:.3} |\n",
            c.community,
            c.size,
            c.batch_fraction,
            c.name_fraction,
            c.best_token.as_deref().unwrap_or("-"),
            c.combined
        ));
    }

    if let Some(v) = &r.validation {
        s.push_str(&format!(
            "\n## Validation\n\n{} planted teams, {} planted accounts, {} present in the community graph. Adjusted Rand index: {}.\n",
            v.teams,
            v.planted_accounts,
            v.planted_in_graph,
            opt(v.adjusted_rand_index)
        ));
    }

    let refs = &r.references;
    s.push_str(&format!(
        "\n## Non-reproducible published references\n\nContext only; the archive behind these counts is not public.\n\n- tweets mentioning the target account: {}\n- tweets after source filtering: {}\n- mention graph: {} nodes, {} edges, {} communities\n- filtered graph: {} nodes, {} communities\n",
        refs.tweets_mentioning_target,
        refs.source_filtered_tweets,
        refs.mention_graph_nodes,
        refs.mention_graph_edges,
        refs.mention_graph_communities,
        refs.filtered_graph_nodes,
        refs.filtered_graph_communities
    ));

    s.push_str("\n## Artifacts\n\n");
    for (k, v) in &r.artifacts {
        s.push_str(&format!("- {k}: `{v}`\n"));
    }
    s
}
