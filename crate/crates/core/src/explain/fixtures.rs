use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{classify_explanation, kappa_table, KappaRow, RuleSet};
use crate::error::{Error, Result};

/// One authored explanation with its expected labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExplanation {
    pub text: String,
    pub gold_labels: BTreeSet<String>,
}

/// The labeled corpus shipped with the crate.
pub fn default_fixtures() -> Vec<LabeledExplanation> {
    parse_fixtures(include_str!("../../fixtures/explanations.jsonl"), "explanations.jsonl").expect("shipped fixtures are valid")
}

fn parse_fixtures(text: &str, origin: &str) -> Result<Vec<LabeledExplanation>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(format!("{origin}:{}", i + 1), e.to_string())))
        .collect()
}

/// Reads JSON lines of `{"text", "gold_labels"}`.
pub fn load_fixtures(path: &Path) -> Result<Vec<LabeledExplanation>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixtures(&text, &path.display().to_string())
}

/// Per-label κ between the classifier and the gold labels.
pub fn fixture_agreement(fixtures: &[LabeledExplanation], rules: &RuleSet) -> Result<Vec<KappaRow>> {
    let predicted: Vec<_> = fixtures.iter().map(|f| classify_explanation(&f.text, rules).labels).collect();
    let gold: Vec<_> = fixtures.iter().map(|f| f.gold_labels.clone()).collect();
    kappa_table(&predicted, &gold, &rules.all_labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus_covers_every_label() {
        let fx = default_fixtures();
        assert!(fx.len() >= 100);
        let rules = RuleSet::default_rules();
        for label in rules.all_labels() {
            assert!(fx.iter().any(|f| f.gold_labels.contains(&label)), "{label} has no fixture");
        }
        assert!(fx.iter().any(|f| f.gold_labels.is_empty()));
        let known: BTreeSet<String> = rules.all_labels().into_iter().collect();
        assert!(fx.iter().all(|f| f.gold_labels.is_subset(&known)));
    }

    #[test]
    fn bad_line_reports_position() {
        let err = parse_fixtures("{\"text\": \"a\", \"gold_labels\": []}\nnope\n", "f.jsonl").unwrap_err();
        assert!(err.to_string().contains("f.jsonl:2"), "{err}");
    }
}
