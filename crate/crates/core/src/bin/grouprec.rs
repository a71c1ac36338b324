use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grouprec::aggregation::StrategyKind;
use grouprec::explain::{classify_explanation, fixture_agreement, load_fixtures, RuleSet};
use grouprec::harness::{self, ExperimentConfig, GeneratorSpec};
use grouprec::metrics::GainKind;
use grouprec::scenario::{self, CorpusSettings};
use grouprec::structure::StructureClass;
use grouprec::Error;

#[derive(Parser)]
#[command(name = "grouprec", version, about = "Audit group recommendations against social choice aggregation strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded scenario corpus on disk.
    GenCorpus {
        #[arg(long, value_delimiter = ',', default_value = "25,50,75")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        per_size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        users: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label every group of a corpus as uniform, intermediate or divergent.
    ClassifyStructure {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Run an experiment, querying endpoints for responses not yet replayed.
    Run(RunArgs),
    /// Run an experiment from the replay store only (no network).
    Replay(RunArgs),
    /// Re-render the reports of a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        ruleset: Option<PathBuf>,
    },
    /// Check a ruleset; with --fixtures, report per-label agreement.
    ValidateRuleset {
        /// Ruleset JSON; the shipped default when omitted.
        path: Option<PathBuf>,
        /// JSON lines of {"text", "gold_labels"}.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Classify one explanation and print the verdict as JSON.
    Explain {
        text: String,
        #[arg(long)]
        ruleset: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    per_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    /// e.g. random,synthetic:ADD,llm:llama3.1:8b
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<String>>,
    /// e.g. ADD,MPL,LMS,APP(50)
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ruleset: Option<PathBuf>,
    #[arg(long)]
    replay_dir: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout_secs: Option<f64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// linear or binary
    #[arg(long)]
    gain: Option<String>,
}

impl RunArgs {
    fn into_config(self, offline: bool) -> grouprec::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        c.endpoint = c.endpoint.with_env()?;
        if let Some(v) = self.out {
            c.output_dir = v;
        }
        if let Some(v) = self.sizes {
            c.corpus.sizes = v;
        }
        if let Some(v) = self.per_size {
            c.corpus.per_size = v;
        }
        if let Some(v) = self.seed {
            c.corpus.master_seed = v;
        }
        if let Some(v) = self.users {
            c.corpus.num_users = v;
        }
        if let Some(v) = self.corpus_dir {
            c.corpus_dir = Some(v);
        }
        if let Some(v) = self.generators {
            c.generators = v.iter().map(|g| g.parse()).collect::<grouprec::Result<Vec<GeneratorSpec>>>()?;
        }
        if let Some(v) = self.strategies {
            c.strategies = v.iter().map(|s| s.parse()).collect::<grouprec::Result<Vec<StrategyKind>>>()?;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.ruleset {
            c.ruleset = Some(v);
        }
        if let Some(v) = self.replay_dir {
            c.replay_dir = Some(v);
        }
        if let Some(v) = self.base_url {
            c.endpoint.base_url = v;
        }
        if let Some(v) = self.temperature {
            c.endpoint.temperature = Some(v);
        }
        if let Some(v) = self.timeout_secs {
            c.endpoint.timeout_secs = v;
        }
        if let Some(v) = self.retries {
            c.endpoint.retries = v;
        }
        if let Some(v) = self.max_in_flight {
            c.max_in_flight = v;
        }
        if let Some(v) = self.gain {
            c.gain = v.parse::<GainKind>()?;
        }
        c.offline |= offline;
        Ok(c)
    }
}

fn load_rules(path: Option<&Path>) -> grouprec::Result<RuleSet> {
    path.map_or_else(|| Ok(RuleSet::default_rules()), RuleSet::load)
}

fn run(cli: Cli) -> grouprec::Result<()> {
    match cli.command {
        Command::GenCorpus { sizes, per_size, seed, users, out } => {
            let corpus = scenario::generate_corpus_with(&CorpusSettings { sizes, per_size, master_seed: seed, num_users: users })?;
            scenario::write_corpus(&corpus, &out)?;
            println!("wrote {} scenarios to {}", corpus.len(), out.display());
        }
        Command::ClassifyStructure { corpus } => {
            let (c, mut manifest) = scenario::read_corpus(&corpus)?;
            let classification = harness::classify_structure(&c, &mut manifest)?;
            manifest.save(&corpus)?;
            println!(
                "μ = {:.4}, σ = {:.4}; uniform {}, intermediate {}, divergent {}",
                classification.mean,
                classification.std_dev,
                classification.count(StructureClass::Uniform),
                classification.count(StructureClass::Intermediate),
                classification.count(StructureClass::Divergent),
            );
        }
        Command::Run(args) => run_experiment(args.into_config(false)?)?,
        Command::Replay(args) => run_experiment(args.into_config(true)?)?,
        Command::Report { run, ruleset } => {
            let reports = harness::report_run(&run, ruleset.as_deref())?;
            for w in &reports.warnings {
                log::warn!("{w}");
            }
            print!("{}", reports.get(harness::NDCG_MD).unwrap_or_default());
        }
        Command::ValidateRuleset { path, fixtures } => {
            let rules = load_rules(path.as_deref())?;
            println!("ruleset ok: {} categories", rules.categories.len());
            if let Some(fx) = fixtures {
                let fixtures = load_fixtures(&fx)?;
                println!("{} fixtures", fixtures.len());
                println!("{:<24} {:>6} {:>6} {:>8}", "label", "gold", "pred", "kappa");
                for row in fixture_agreement(&fixtures, &rules)? {
                    let k = row.kappa.map_or("undef".to_string(), |k| format!("{k:.3}"));
                    println!("{:<24} {:>6} {:>6} {:>8}", row.label, row.support_b, row.support_a, k);
                }
            }
        }
        Command::Explain { text, ruleset } => {
            let rules = load_rules(ruleset.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&classify_explanation(&text, &rules))?);
        }
    }
    Ok(())
}

fn run_experiment(config: ExperimentConfig) -> grouprec::Result<()> {
    let artifact = harness::run_experiment(&config)?;
    let records = artifact.records().count();
    let failures = artifact.outcomes.iter().filter(|o| !o.parse_status.is_usable()).count();
    println!(
        "{} units ({} new), {} records, {} parse failures; reports in {}",
        artifact.outcomes.len(),
        artifact.computed,
        records,
        failures,
        config.output_dir.join(harness::REPORTS_DIR).display()
    );
    for w in &artifact.reports.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::MissingResponses { missing } = &e {
                for m in missing.iter().take(20) {
                    eprintln!("  missing {m}");
                }
                if missing.len() > 20 {
                    eprintln!("  ... and {} more", missing.len() - 20);
                }
            }
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::MissingResponses { .. } => 3,
                _ => 1,
            })
        }
    }
}
