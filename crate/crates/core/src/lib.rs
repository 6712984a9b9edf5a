// SPDX-License-Identifier: Apache-2.0

//! Detection of coordinated account teams in tweet corpora: ingest,
//! co-retweet projection, community detection, eigenvector centrality,
//! bot-score density analysis and account-metadata signals.

pub mod bot_scoring;
pub mod centrality;
pub mod community;
pub mod density;
pub mod error;
pub mod exec;
pub mod export;
pub mod graphs;
pub mod ingest;
pub mod pipeline;
pub mod signals;
pub mod synth;
pub mod weighted;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
