//! Contextualize group recommendations produced by black-box generators.
//!
//! A generator (an LLM behind a chat-completion endpoint, a replayed
//! transcript, a random baseline, or a synthetic strategy replay) receives an
//! anonymized user × item rating matrix and returns a top-k list plus a
//! free-text explanation. This crate scores that list against the classic
//! social choice aggregation strategies (additive utilitarian, most pleasure,
//! least misery, approval voting) with NDCG@k, splits groups into uniform and
//! divergent by within-group user distance, and audits the explanation with a
//! rule-based fuzzy keyword classifier.
//!
//! Module map:
//!
//! - [`scenario`]: seeded rating matrices, table text format, corpus files
//! - [`aggregation`]: strategy scores, ranked lists, random baseline
//! - [`structure`]: pairwise user distances and μ±σ group classification
//! - [`metrics`]: NDCG@k, summaries, ΔNDCG
//! - [`explain`]: explanation categorization, negation, thresholds, Cohen's κ
//! - [`llm`]: prompts, endpoint client, replay store, response parsing
//! - [`harness`]: end-to-end runs and report rendering

pub mod aggregation;
pub mod error;
pub mod explain;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod scenario;
pub mod seed;
pub mod structure;

pub use aggregation::{aggregate, random_recommendation, strategy_scores, ItemScores, RankedList, StrategyKind};
pub use error::{Error, Result};
pub use scenario::{generate_corpus, generate_scenario, parse_table, render_table, GroupScenario, ScenarioCorpus};

/// Default recommendation list length.
pub const DEFAULT_K: usize = 10;
