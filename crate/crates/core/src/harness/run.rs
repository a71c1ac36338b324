use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, GeneratorSpec};
use super::report::{render_reports, Reports};
use crate::aggregation::{random_recommendation, strategy_scores, RankedList, StrategyKind};
use crate::error::{Error, Result};
use crate::explain::{classify_explanation, ExplanationVerdict, RuleSet};
use crate::llm::{build_prompt, parse_response, query_endpoint, synthetic_generator, ParseStatus, ReplayEntry, ReplayStore};
use crate::metrics::{ndcg_at_k_with, EvalRecord, FailureRecord, GainKind};
use crate::scenario::{self, CorpusManifest, GroupScenario, ScenarioCorpus};
use crate::seed;
use crate::structure::{classify_corpus, corpus_distances, StructureClass, StructureClassification};

pub const OUTCOMES_FILE: &str = "outcomes.jsonl";
pub const RUN_MANIFEST_FILE: &str = "manifest.json";
pub const STRUCTURE_FILE: &str = "structure.json";
pub const CORPUS_DIR: &str = "corpus";
pub const REPORTS_DIR: &str = "reports";

/// Everything produced for one (scenario, generator) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitOutcome {
    pub scenario_id: String,
    pub generator: String,
    pub item_count: usize,
    pub structure: StructureClass,
    pub normalized_distance: f64,
    pub parse_status: ParseStatus,
    pub recommendation: Option<RankedList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ExplanationVerdict>,
    pub records: Vec<EvalRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureRecord>,
}

/// Settings that must match for a run directory to be resumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFingerprint {
    pub corpus_sha256: String,
    pub strategies: Vec<StrategyKind>,
    pub k: usize,
    pub gain: GainKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub fingerprint: RunFingerprint,
    pub scenario_count: usize,
    pub started_at_unix: u64,
    #[serde(default)]
    pub finished_at_unix: Option<u64>,
    #[serde(default)]
    pub units_completed: usize,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub manifest: RunManifest,
    pub structure: StructureClassification,
    pub outcomes: Vec<UnitOutcome>,
    /// Units computed by this invocation (0 when resuming a finished run).
    pub computed: usize,
    pub reports: Reports,
}

impl RunArtifact {
    pub fn records(&self) -> impl Iterator<Item = &EvalRecord> {
        self.outcomes.iter().flat_map(|o| &o.records)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FailureRecord> {
        self.outcomes.iter().flat_map(|o| &o.failures)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = (&UnitOutcome, &ExplanationVerdict)> {
        self.outcomes.iter().filter_map(|o| o.verdict.as_ref().map(|v| (o, v)))
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn corpus_hash(manifest: &CorpusManifest) -> String {
    let mut h = Sha256::new();
    for e in &manifest.scenarios {
        h.update(e.scenario_id.as_bytes());
        h.update(b":");
        h.update(e.sha256.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads outcome lines, ignoring a torn final line.
pub fn load_outcomes(path: &Path) -> Result<Vec<UnitOutcome>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<UnitOutcome>(&line) {
            Ok(o) => {
                if seen.insert((o.scenario_id.clone(), o.generator.clone())) {
                    out.push(o);
                }
            }
            Err(e) => log::warn!("skipping unreadable outcome line in {}: {e}", path.display()),
        }
    }
    Ok(out)
}

struct OutcomeWriter {
    path: PathBuf,
    file: fs::File,
}

impl OutcomeWriter {
    fn open(path: PathBuf) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(OutcomeWriter { path, file })
    }

    fn write(&mut self, o: &UnitOutcome) -> Result<()> {
        let line = serde_json::to_string(o)? + "\n";
        self.file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))
    }
}

/// Scores one recommendation list (and explanation, when present).
#[allow(clippy::too_many_arguments)]
pub(crate) fn score_unit(
    scenario: &GroupScenario,
    generator: &str,
    label: &crate::structure::GroupStructureLabel,
    status: ParseStatus,
    list: Option<RankedList>,
    explanation: Option<String>,
    config: &ExperimentConfig,
    rules: &RuleSet,
) -> UnitOutcome {
    let mut outcome = UnitOutcome {
        scenario_id: scenario.scenario_id.clone(),
        generator: generator.to_string(),
        item_count: scenario.num_items(),
        structure: label.label,
        normalized_distance: label.normalized_distance,
        parse_status: status.clone(),
        recommendation: None,
        explanation: None,
        verdict: None,
        records: Vec::new(),
        failures: Vec::new(),
    };
    let (ParseStatus::Ok | ParseStatus::Repaired, Some(mut list)) = (&status, list) else {
        let reason = match status {
            ParseStatus::Failed(r) => r,
            _ => "no_recommendation".into(),
        };
        outcome.failures.push(FailureRecord {
            scenario_id: outcome.scenario_id.clone(),
            generator: outcome.generator.clone(),
            item_count: outcome.item_count,
            strategy: None,
            reason,
        });
        return outcome;
    };
    list.source = generator.to_string();
    for &strategy in &config.strategies {
        let reference = strategy_scores(scenario, strategy);
        match ndcg_at_k_with(&list, &reference, config.k, config.gain) {
            Ok(ndcg) => outcome.records.push(EvalRecord {
                scenario_id: outcome.scenario_id.clone(),
                generator: outcome.generator.clone(),
                strategy,
                ndcg,
                item_count: outcome.item_count,
                structure: label.label,
                normalized_distance: label.normalized_distance,
            }),
            Err(e) => outcome.failures.push(FailureRecord {
                scenario_id: outcome.scenario_id.clone(),
                generator: outcome.generator.clone(),
                item_count: outcome.item_count,
                strategy: Some(strategy),
                reason: e.to_string(),
            }),
        }
    }
    if let Some(text) = explanation {
        outcome.verdict = Some(classify_explanation(&text, rules));
        outcome.explanation = Some(text);
    }
    outcome.recommendation = Some(list);
    outcome
}

fn offline_unit(
    scenario: &GroupScenario,
    generator: &GeneratorSpec,
    label: &crate::structure::GroupStructureLabel,
    config: &ExperimentConfig,
    rules: &RuleSet,
) -> UnitOutcome {
    let name = generator.to_string();
    match generator {
        GeneratorSpec::Random => {
            let seed = seed::derive(scenario.seed, seed::fnv1a(&name));
            match random_recommendation(scenario, config.k, seed) {
                Ok(list) => score_unit(scenario, &name, label, ParseStatus::Ok, Some(list), None, config, rules),
                Err(e) => score_unit(scenario, &name, label, ParseStatus::Failed(e.to_string()), None, None, config, rules),
            }
        }
        GeneratorSpec::Synthetic { strategy, template } => {
            let raw = synthetic_generator(scenario, *strategy, config.k, *template);
            response_unit(scenario, &name, label, &raw, config, rules)
        }
        GeneratorSpec::Llm { .. } => unreachable!("llm generators are not offline"),
    }
}

fn response_unit(
    scenario: &GroupScenario,
    generator: &str,
    label: &crate::structure::GroupStructureLabel,
    raw: &str,
    config: &ExperimentConfig,
    rules: &RuleSet,
) -> UnitOutcome {
    let parsed = parse_response(raw, scenario, config.k);
    let usable = parsed.parse_status.is_usable();
    score_unit(
        scenario,
        generator,
        label,
        parsed.parse_status,
        usable.then_some(parsed.recommendation),
        usable.then_some(parsed.explanation),
        config,
        rules,
    )
}

fn prepare_corpus(config: &ExperimentConfig) -> Result<(ScenarioCorpus, CorpusManifest)> {
    let dir = config.output_dir.join(CORPUS_DIR);
    if dir.join(scenario::MANIFEST_FILE).exists() {
        return scenario::read_corpus(&dir);
    }
    let corpus = match &config.corpus_dir {
        Some(src) => scenario::read_corpus(src)?.0,
        None => scenario::generate_corpus_with(&config.corpus)?,
    };
    let manifest = scenario::write_corpus(&corpus, &dir)?;
    Ok((corpus, manifest))
}

/// Pooled structure labels, also written into the corpus manifest.
pub fn classify_structure(corpus: &ScenarioCorpus, manifest: &mut CorpusManifest) -> Result<StructureClassification> {
    let distances = corpus_distances(&corpus.scenarios);
    let classification = classify_corpus(&distances)?;
    for entry in &mut manifest.scenarios {
        if let Some(l) = classification.label_of(&entry.scenario_id) {
            entry.normalized_distance = Some(l.normalized_distance);
            entry.label = Some(l.label);
        }
    }
    Ok(classification)
}

/// Runs (or resumes) an experiment in `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let rules = match &config.ruleset {
        Some(p) => RuleSet::load(p)?,
        None => RuleSet::default_rules(),
    };

    let (corpus, mut corpus_manifest) = prepare_corpus(config)?;
    if let Some(min) = corpus.size_strata.keys().min() {
        if config.k > *min {
            return Err(Error::Config(format!("k = {} exceeds the smallest item count {min}", config.k)));
        }
    }
    let structure = classify_structure(&corpus, &mut corpus_manifest)?;
    corpus_manifest.save(&out.join(CORPUS_DIR))?;
    let structure_path = out.join(STRUCTURE_FILE);
    fs::write(&structure_path, serde_json::to_string_pretty(&structure)? + "\n").map_err(|e| Error::io(&structure_path, e))?;

    let fingerprint = RunFingerprint {
        corpus_sha256: corpus_hash(&corpus_manifest),
        strategies: config.strategies.clone(),
        k: config.k,
        gain: config.gain,
    };
    let manifest_path = out.join(RUN_MANIFEST_FILE);
    let started_at_unix = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let previous: RunManifest = serde_json::from_str(&text)?;
        if previous.fingerprint != fingerprint {
            return Err(Error::Config(format!(
                "{} holds a run with different corpus/strategies/k/gain; use a fresh output directory",
                out.display()
            )));
        }
        previous.started_at_unix
    } else {
        now_unix()
    };
    let mut manifest = RunManifest {
        config: config.clone(),
        fingerprint,
        scenario_count: corpus.len(),
        started_at_unix,
        finished_at_unix: None,
        units_completed: 0,
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    let outcomes_path = out.join(OUTCOMES_FILE);
    let mut outcomes = load_outcomes(&outcomes_path)?;
    let done: HashSet<(String, String)> = outcomes.iter().map(|o| (o.scenario_id.clone(), o.generator.clone())).collect();
    let mut writer = OutcomeWriter::open(outcomes_path)?;
    let mut computed = 0;
    let mut missing: Vec<String> = Vec::new();

    let label_of = |s: &GroupScenario| structure.label_of(&s.scenario_id).expect("every scenario is classified");

    for generator in &config.generators {
        let name = generator.to_string();
        let pending: Vec<&GroupScenario> =
            corpus.scenarios.iter().filter(|s| !done.contains(&(s.scenario_id.clone(), name.clone()))).collect();
        if pending.is_empty() {
            continue;
        }
        match generator {
            GeneratorSpec::Llm { model } => {
                let mut store = ReplayStore::open(config.replay_dir())?;
                let mut live: Vec<&GroupScenario> = Vec::new();
                for s in &pending {
                    match store.get(model, &s.scenario_id) {
                        Some(raw) => {
                            let o = response_unit(s, &name, label_of(s), raw, config, &rules);
                            writer.write(&o)?;
                            outcomes.push(o);
                            computed += 1;
                        }
                        None => live.push(s),
                    }
                }
                if live.is_empty() {
                    continue;
                }
                if config.offline {
                    missing.extend(live.iter().map(|s| format!("{name}/{}", s.scenario_id)));
                    continue;
                }
                let mut endpoint = config.endpoint.clone();
                endpoint.model = model.clone();
                let next = AtomicUsize::new(0);
                let (tx, rx) = mpsc::channel::<(usize, Result<String>)>();
                std::thread::scope(|scope| -> Result<()> {
                    for _ in 0..config.max_in_flight.min(live.len()) {
                        let tx = tx.clone();
                        let (next, live, endpoint) = (&next, &live, &endpoint);
                        scope.spawn(move || loop {
                            let i = next.fetch_add(1, Ordering::SeqCst);
                            let Some(s) = live.get(i) else { break };
                            let prompt = build_prompt(s, config.k);
                            if tx.send((i, query_endpoint(endpoint, &prompt))).is_err() {
                                break;
                            }
                        });
                    }
                    drop(tx);
                    for (i, result) in rx {
                        let s = live[i];
                        match result {
                            Ok(raw) => {
                                store.insert(ReplayEntry {
                                    scenario_id: s.scenario_id.clone(),
                                    model: model.clone(),
                                    raw_text: raw.clone(),
                                })?;
                                let o = response_unit(s, &name, label_of(s), &raw, config, &rules);
                                writer.write(&o)?;
                                outcomes.push(o);
                                computed += 1;
                            }
                            Err(e) => {
                                log::error!("{name}/{}: {e}", s.scenario_id);
                                missing.push(format!("{name}/{}", s.scenario_id));
                            }
                        }
                    }
                    Ok(())
                })?;
            }
            _ => {
                let fresh: Vec<UnitOutcome> = pending.par_iter().map(|s| offline_unit(s, generator, label_of(s), config, &rules)).collect();
                for o in fresh {
                    writer.write(&o)?;
                    outcomes.push(o);
                    computed += 1;
                }
            }
        }
    }

    // corpus order, then generator order, independent of completion order
    let position: BTreeMap<&str, usize> = corpus.scenarios.iter().enumerate().map(|(i, s)| (s.scenario_id.as_str(), i)).collect();
    let gen_pos: BTreeMap<String, usize> = config.generators.iter().enumerate().map(|(i, g)| (g.to_string(), i)).collect();
    outcomes.retain(|o| position.contains_key(o.scenario_id.as_str()) && gen_pos.contains_key(&o.generator));
    outcomes.sort_by_key(|o| (gen_pos[&o.generator], position[o.scenario_id.as_str()]));

    manifest.units_completed = outcomes.len();
    if missing.is_empty() {
        manifest.finished_at_unix = Some(now_unix());
    }
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    if !missing.is_empty() {
        return Err(Error::MissingResponses { missing });
    }

    let reports = render_reports(&outcomes, &rules)?;
    reports.write_to(&out.join(REPORTS_DIR))?;
    Ok(RunArtifact { manifest, structure, outcomes, computed, reports })
}

/// Re-renders the reports of an existing run directory from its outcomes.
pub fn report_run(run_dir: &Path, ruleset: Option<&Path>) -> Result<Reports> {
    let manifest_path = run_dir.join(RUN_MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let rules = match ruleset.map(Path::to_path_buf).or(manifest.config.ruleset.clone()) {
        Some(p) => RuleSet::load(&p)?,
        None => RuleSet::default_rules(),
    };
    let outcomes = load_outcomes(&run_dir.join(OUTCOMES_FILE))?;
    let reports = render_reports(&outcomes, &rules)?;
    reports.write_to(&run_dir.join(REPORTS_DIR))?;
    Ok(reports)
}
