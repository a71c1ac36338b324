use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::normalize_phrase;
use crate::error::{Error, Result};

/// Longest keyphrase, in tokens, the matcher compares against.
pub const MAX_WINDOW_TOKENS: usize = 4;

const VALUE_SLOT: &str = "{value}";

const DEFAULT_RULES: &str = include_str!("../../rules/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub label: String,
    pub keyphrases: Vec<String>,
}

/// Keyphrase taxonomy and matching parameters. Load with
/// [`RuleSet::from_json`] or [`RuleSet::load`]; both normalize and validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub categories: Vec<Category>,
    pub negation_cues: Vec<String>,
    #[serde(default = "default_window")]
    pub negation_window: usize,
    #[serde(default = "default_threshold")]
    pub similarity_threshold: f64,
    #[serde(default)]
    pub threshold_phrases: Vec<String>,
    /// Tokens that, right after a captured number, mark it as a count rather
    /// than a rating ("more than 2 users").
    #[serde(default)]
    pub threshold_exclusions: Vec<String>,
    #[serde(default = "default_undefined")]
    pub undefined_popularity_label: String,
    #[serde(default = "default_threshold_label")]
    pub threshold_label: String,
    #[serde(skip)]
    templates: Vec<Vec<Option<String>>>,
}

fn default_window() -> usize {
    3
}

fn default_threshold() -> f64 {
    0.85
}

fn default_undefined() -> String {
    "popularity_undefined".into()
}

fn default_threshold_label() -> String {
    "popularity_threshold".into()
}

impl RuleSet {
    /// The shipped taxonomy.
    pub fn default_rules() -> Self {
        Self::from_json(DEFAULT_RULES).expect("shipped ruleset is valid")
    }

    pub fn default_json() -> &'static str {
        DEFAULT_RULES
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: RuleSet = serde_json::from_str(json).map_err(|e| Error::Config(format!("ruleset: {e}")))?;
        raw.prepared()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Normalizes phrases, compiles templates and checks every invariant.
    pub fn prepared(mut self) -> Result<Self> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(Error::Config(format!("similarity_threshold must be in (0, 1], got {}", self.similarity_threshold)));
        }
        if self.categories.is_empty() {
            return Err(Error::Config("ruleset has no categories".into()));
        }
        let mut labels = HashSet::new();
        for cat in &mut self.categories {
            if cat.label.trim().is_empty() {
                return Err(Error::Config("empty category label".into()));
            }
            if !labels.insert(cat.label.clone()) {
                return Err(Error::Config(format!("duplicate category label {:?}", cat.label)));
            }
            if cat.keyphrases.is_empty() {
                return Err(Error::Config(format!("category {:?} has no keyphrases", cat.label)));
            }
            for kp in &mut cat.keyphrases {
                let norm = normalize_phrase(kp);
                if norm.is_empty() {
                    return Err(Error::Config(format!("empty keyphrase in {:?}", cat.label)));
                }
                if norm.split(' ').count() > MAX_WINDOW_TOKENS {
                    return Err(Error::Config(format!("keyphrase {kp:?} is longer than {MAX_WINDOW_TOKENS} tokens")));
                }
                *kp = norm;
            }
        }
        if !labels.contains(&self.undefined_popularity_label) {
            return Err(Error::Config(format!("undefined_popularity_label {:?} is not a category", self.undefined_popularity_label)));
        }
        if labels.contains(&self.threshold_label) {
            return Err(Error::Config(format!("threshold_label {:?} must not also be a keyphrase category", self.threshold_label)));
        }
        self.negation_cues = self.negation_cues.iter().map(|c| normalize_phrase(c)).collect();
        if let Some(c) = self.negation_cues.iter().find(|c| c.is_empty() || c.contains(' ')) {
            return Err(Error::Config(format!("negation cue {c:?} must be a single token")));
        }
        // windows holding a cue are never compared, so such a keyphrase could not match
        for cat in &self.categories {
            if let Some(kp) = cat.keyphrases.iter().find(|kp| kp.split(' ').any(|t| self.negation_cues.iter().any(|c| c == t))) {
                return Err(Error::Config(format!("keyphrase {kp:?} of {:?} contains a negation cue", cat.label)));
            }
        }
        self.threshold_exclusions = self.threshold_exclusions.iter().map(|c| normalize_phrase(c)).collect();
        self.templates = self.threshold_phrases.iter().map(|p| compile_template(p)).collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.label.as_str())
    }

    /// Every label a verdict can carry, including the threshold label.
    pub fn all_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.labels().map(str::to_string).collect();
        v.push(self.threshold_label.clone());
        v
    }

    pub fn is_negation_cue(&self, token: &str) -> bool {
        self.negation_cues.iter().any(|c| c == token)
    }

    pub(crate) fn threshold_templates(&self) -> &[Vec<Option<String>>] {
        &self.templates
    }
}

fn compile_template(phrase: &str) -> Result<Vec<Option<String>>> {
    let parts: Vec<&str> = phrase.split(VALUE_SLOT).collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("threshold phrase {phrase:?} must contain exactly one {VALUE_SLOT}")));
    }
    let mut out: Vec<Option<String>> = normalize_phrase(parts[0]).split_whitespace().map(|s| Some(s.to_string())).collect();
    out.push(None);
    out.extend(normalize_phrase(parts[1]).split_whitespace().map(|s| Some(s.to_string())));
    if out.len() == 1 {
        return Err(Error::Config(format!("threshold phrase {phrase:?} has no literal words")));
    }
    Ok(out)
}
