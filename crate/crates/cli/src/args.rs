// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use botnet_core::bot_scoring::{parse_pair, Axis, FetchConfig, DEFAULT_MAX_RETRIES, DEFAULT_RATE_LIMIT, ENDPOINT_ENV, TOKEN_ENV};
use botnet_core::centrality::{Direction, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use botnet_core::density::{BandwidthRule, DensityParams, DEFAULT_GRID, DEFAULT_MIN_DENSITY_FRACTION};
use botnet_core::ingest::{parse_timestamp, ColumnMap, ColumnRole};
use botnet_core::pipeline::{GraphChoice, InputFormat};
use botnet_core::{Error, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "botnet", version, about = "Detect coordinated socialbot teams in tweet archives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and filter an archive, then print dataset statistics.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write the filtered tweets as normalized JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the mention and coordination graphs and export them.
    Graph {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        projection: ProjectionArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Detect communities with Louvain and write partition.csv.
    Communities {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        community: CommunityArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rank accounts by eigenvector centrality and write centrality.csv.
    Centrality {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        centrality: CentralityArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fetch missing bot scores into a JSON-lines cache.
    FetchScores {
        /// Account list: one name per line, or a CSV whose first column holds names.
        #[arg(long)]
        accounts: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        fetch: FetchArgs,
    },
    /// Estimate score densities and classify their modality.
    Density {
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Creation-batch and name-cluster evidence per community.
    Signals {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        community: CommunityArgs,
        #[command(flatten)]
        signals: SignalArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with planted bot teams.
    Synth(SynthArgs),
    /// Print report.md regenerated from a run directory's report.json.
    Report {
        #[arg(long, default_value = "out")]
        dir: PathBuf,
    },
    /// Run every stage and write all artifacts and the report.
    Run(Box<RunArgs>),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the file extension.
    #[arg(long)]
    pub format: Option<InputFormat>,
    /// CSV header override, `role=header` (repeatable).
    #[arg(long = "column", value_parser = parse_column)]
    pub columns: Vec<(ColumnRole, String)>,
    #[arg(long)]
    pub source_client: Option<String>,
    #[arg(long, value_parser = parse_instant)]
    pub window_start: Option<DateTime<Utc>>,
    #[arg(long, value_parser = parse_instant)]
    pub window_end: Option<DateTime<Utc>>,
}

impl InputArgs {
    pub fn format(&self) -> InputFormat {
        self.format.unwrap_or_else(|| InputFormat::infer(&self.input))
    }

    pub fn column_map(&self) -> ColumnMap {
        self.columns
            .iter()
            .fold(ColumnMap::default(), |m, (role, header)| m.with(*role, header.clone()))
    }
}

#[derive(Debug, Args)]
pub struct ProjectionArgs {
    /// Coordination time bucket in seconds.
    #[arg(long, default_value_t = botnet_core::graphs::DEFAULT_BUCKET_WIDTH)]
    pub bucket_width: i64,
    /// Minimum shared (tweet, bucket) events per coordination edge.
    #[arg(long, default_value_t = botnet_core::graphs::DEFAULT_MIN_SHARED)]
    pub k: u64,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub projection: ProjectionArgs,
    /// Graph to analyse: coordination or mention.
    #[arg(long, default_value_t = GraphChoice::default())]
    pub graph: GraphChoice,
}

#[derive(Debug, Args)]
pub struct CommunityArgs {
    #[arg(long, default_value_t = botnet_core::community::DEFAULT_RESOLUTION)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    /// in, out or undirected; defaults per graph.
    #[arg(long)]
    pub direction: Option<Direction>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Normalize each connected component separately.
    #[arg(long)]
    pub per_component: bool,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    #[arg(long, env = TOKEN_ENV, hide_env_values = true, default_value = "")]
    pub token: String,
    /// Requests per minute.
    #[arg(long, default_value_t = DEFAULT_RATE_LIMIT)]
    pub rate_limit: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    pub max_retries: u32,
}

impl FetchArgs {
    pub fn config(&self) -> Result<FetchConfig> {
        let endpoint = self
            .endpoint
            .clone()
            .ok_or_else(|| Error::config(format!("a scoring endpoint is required (--endpoint or {ENDPOINT_ENV})")))?;
        Ok(FetchConfig {
            rate_limit: self.rate_limit,
            max_retries: self.max_retries,
            ..FetchConfig::new(endpoint, self.token.clone())
        })
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Comma-separated `x:y` score pairs.
    #[arg(
        long,
        value_parser = parse_pairs,
        value_delimiter = ',',
        default_value = "content:sentiment,network:friend,temporal:friend,network:temporal"
    )]
    pub pairs: Vec<(Axis, Axis)>,
    /// scott, silverman or a fixed positive bandwidth.
    #[arg(long, default_value = "scott")]
    pub bandwidth: BandwidthRule,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_DENSITY_FRACTION)]
    pub min_density_fraction: f64,
    /// Defaults to the larger bandwidth.
    #[arg(long)]
    pub merge_radius: Option<f64>,
}

impl DensityArgs {
    pub fn params(&self) -> DensityParams {
        DensityParams {
            bandwidth: self.bandwidth,
            grid: self.grid,
            min_density_fraction: self.min_density_fraction,
            merge_radius: self.merge_radius,
            ..DensityParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    #[arg(long, default_value_t = botnet_core::signals::DEFAULT_WINDOW_DAYS)]
    pub batch_window_days: i64,
    #[arg(long, default_value_t = botnet_core::signals::DEFAULT_MIN_BATCH)]
    pub min_batch: usize,
    #[arg(long, default_value_t = botnet_core::signals::DEFAULT_MIN_TOKEN_LEN)]
    pub min_token_len: usize,
    #[arg(long, default_value_t = botnet_core::signals::DEFAULT_MIN_CLUSTER)]
    pub min_cluster: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub teams: usize,
    #[arg(long, default_value_t = 20)]
    pub team_size: usize,
    /// Coordinated waves per team.
    #[arg(long, default_value_t = 50)]
    pub waves: usize,
    /// Maximum retweet offset from the wave instant, in seconds.
    #[arg(long, default_value_t = 0)]
    pub jitter: i64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub background_accounts: usize,
    #[arg(long, default_value_t = 2_000)]
    pub background_tweets: usize,
    /// Creation window per team in days; the last value repeats.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub creation_window_days: Vec<u32>,
    #[arg(long, default_value = "corpus.jsonl")]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub community: CommunityArgs,
    #[command(flatten)]
    pub centrality: CentralityArgs,
    /// Score cache read before density estimation.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Fetch scores missing from the cache before density estimation.
    #[arg(long)]
    pub fetch: bool,
    #[command(flatten)]
    pub fetch_args: FetchArgs,
    #[command(flatten)]
    pub density: DensityArgs,
    #[command(flatten)]
    pub signals: SignalArgs,
    /// Synthetic ground truth for the validation footer.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_instant(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    parse_timestamp(s).ok_or_else(|| format!("'{s}' is not a recognised timestamp"))
}

fn parse_column(s: &str) -> std::result::Result<(ColumnRole, String), String> {
    let (role, header) = s.split_once('=').ok_or_else(|| format!("'{s}' must look like role=header"))?;
    let role: ColumnRole = role.parse().map_err(|e: Error| e.to_string())?;
    Ok((role, header.to_string()))
}

fn parse_pairs(s: &str) -> std::result::Result<(Axis, Axis), String> {
    parse_pair(s).map_err(|e| e.to_string())
}
