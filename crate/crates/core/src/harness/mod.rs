//! End-to-end experiments: corpus → generators → scores → reports.
//!
//! A run directory holds:
//!
//! ```text
//! manifest.json        config snapshot, corpus fingerprint, timestamps
//! corpus/              scenarios + corpus manifest (with structure labels)
//! structure.json       pooled μ, σ and every group label
//! outcomes.jsonl       one line per (scenario, generator), append-only
//! replay/              raw model outputs, one JSON-lines file per model
//! reports/             CSV and markdown tables
//! ```
//!
//! Rerunning against an existing directory skips every (scenario, generator)
//! pair already in `outcomes.jsonl`.

mod config;
mod report;
mod run;

pub use config::{ExperimentConfig, GeneratorSpec};
pub use report::{category_percentages, render_reports, Reports};
pub use report::{CATEGORIES_CSV, CATEGORIES_MD, DELTA_CSV, DELTA_MD, NDCG_CSV, NDCG_MD, STRUCTURE_CSV, STRUCTURE_MD};
pub use run::{
    classify_structure, load_outcomes, report_run, run_experiment, RunArtifact, RunFingerprint, RunManifest, UnitOutcome, CORPUS_DIR,
    OUTCOMES_FILE, REPORTS_DIR, RUN_MANIFEST_FILE, STRUCTURE_FILE,
};
