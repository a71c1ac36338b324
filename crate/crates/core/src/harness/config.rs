use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aggregation::StrategyKind;
use crate::error::{Error, Result};
use crate::llm::EndpointConfig;
use crate::metrics::GainKind;
use crate::scenario::CorpusSettings;

/// Where a recommendation comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorSpec {
    /// Uniformly random top-k list; no explanation.
    Random,
    /// Replays a strategy with a templated explanation.
    Synthetic { strategy: StrategyKind, template: usize },
    /// A model behind the configured endpoint (or its replay store).
    Llm { model: String },
}

impl GeneratorSpec {
    pub fn is_offline(&self) -> bool {
        !matches!(self, GeneratorSpec::Llm { .. })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Random => f.write_str("random"),
            GeneratorSpec::Synthetic { strategy, template: 0 } => write!(f, "synthetic:{strategy}"),
            GeneratorSpec::Synthetic { strategy, template } => write!(f, "synthetic:{strategy}#{template}"),
            GeneratorSpec::Llm { model } => write!(f, "llm:{model}"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("random") {
            return Ok(GeneratorSpec::Random);
        }
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let (name, template) = match rest.split_once('#') {
                Some((n, t)) => (n, t.parse().map_err(|_| Error::Config(format!("bad template id in generator {s:?}")))?),
                None => (rest, 0),
            };
            return Ok(GeneratorSpec::Synthetic { strategy: name.parse()?, template });
        }
        if let Some(model) = s.strip_prefix("llm:") {
            if model.trim().is_empty() {
                return Err(Error::Config("llm generator needs a model name".into()));
            }
            return Ok(GeneratorSpec::Llm { model: model.trim().to_string() });
        }
        Err(Error::Config(format!("unknown generator {s:?} (expected random, synthetic:<strategy>, or llm:<model>)")))
    }
}

impl Serialize for GeneratorSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GeneratorSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub corpus: CorpusSettings,
    /// Load this corpus instead of generating one from `corpus`.
    pub corpus_dir: Option<PathBuf>,
    pub generators: Vec<GeneratorSpec>,
    pub strategies: Vec<StrategyKind>,
    pub k: usize,
    /// Ruleset JSON; the shipped default when absent.
    pub ruleset: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub endpoint: EndpointConfig,
    /// Defaults to `<output_dir>/replay`.
    pub replay_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub gain: GainKind,
    /// Never contact the endpoint; LLM generators must be served from replay.
    pub offline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: CorpusSettings::default(),
            corpus_dir: None,
            generators: vec![GeneratorSpec::Random],
            strategies: StrategyKind::standard().to_vec(),
            k: crate::DEFAULT_K,
            ruleset: None,
            output_dir: PathBuf::from("run"),
            endpoint: EndpointConfig::default(),
            replay_dir: None,
            max_in_flight: 4,
            gain: GainKind::Linear,
            offline: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn replay_dir(&self) -> PathBuf {
        self.replay_dir.clone().unwrap_or_else(|| self.output_dir.join("replay"))
    }

    /// Checks the config-level invariants; the item-count bound is checked
    /// again against the actual corpus when one is loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.generators.is_empty() {
            return Err(Error::Config("at least one generator is required".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be >= 1".into()));
        }
        if self.corpus_dir.is_none() {
            if let Some(min) = self.corpus.sizes.iter().min() {
                if self.k > *min {
                    return Err(Error::Config(format!("k = {} exceeds the smallest item count {min}", self.k)));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(g) = self.generators.iter().find(|g| !seen.insert(g.to_string())) {
            return Err(Error::Config(format!("generator {g} listed twice")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(s) = self.strategies.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("strategy {s} listed twice")));
        }
        if self.generators.iter().any(|g| !g.is_offline()) && !self.offline && self.endpoint.base_url.is_empty() {
            return Err(Error::Config("llm generators need endpoint.base_url".into()));
        }
        Ok(())
    }
}
