//! Rule-based categorization of recommendation explanations.
//!
//! Explanations are split into case-folded tokens; every window of one to four
//! tokens inside a sentence is compared against each category keyphrase with
//! normalized Levenshtein similarity. A match above the ruleset threshold adds
//! the category unless a negation cue appears shortly before it. Numeric
//! thresholds ("ratings above 70") are extracted separately and turn an
//! undefined popularity claim into an explicit threshold claim.

mod fixtures;
mod kappa;
mod rules;
pub mod text;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use fixtures::{default_fixtures, fixture_agreement, load_fixtures, LabeledExplanation};
pub use kappa::{cohens_kappa, kappa_table, KappaRow};
pub use rules::{Category, RuleSet, MAX_WINDOW_TOKENS};
use text::{tokenize, Span, Token};

/// Normalized Levenshtein similarity: `1 − distance / max(len)`, over chars.
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyphraseMatch {
    pub label: String,
    pub keyphrase: String,
    pub span: Span,
    pub matched: String,
    pub similarity: f64,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedThreshold {
    pub value: f64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExplanationVerdict {
    pub labels: BTreeSet<String>,
    pub matches: Vec<KeyphraseMatch>,
    pub extracted_thresholds: Vec<ExtractedThreshold>,
}

impl ExplanationVerdict {
    pub fn has(&self, label: &str) -> bool {
        self.labels.contains(label)
    }
}

/// True iff a cue occurs within `window` tokens before `span_start`.
pub fn detect_negation(tokens: &[Token], span_start: usize, cues: &[String], window: usize) -> bool {
    let from = span_start.saturating_sub(window);
    tokens[from..span_start.min(tokens.len())].iter().any(|t| cues.contains(&t.text))
}

/// Indices where each sentence begins, plus a final `tokens.len()`.
fn sentence_bounds(tokens: &[Token]) -> Vec<usize> {
    let mut bounds = vec![0];
    for i in 1..tokens.len() {
        if tokens[i].sentence != tokens[i - 1].sentence {
            bounds.push(i);
        }
    }
    bounds.push(tokens.len());
    bounds
}

fn join(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.text);
    }
    s
}

fn parse_number(token: &str) -> Option<f64> {
    token.replace(',', ".").parse::<f64>().ok().filter(|v| v.is_finite())
}

fn find_thresholds(text: &str, tokens: &[Token], rules: &RuleSet) -> Vec<ExtractedThreshold> {
    let bounds = sentence_bounds(tokens);
    let mut found: Vec<(usize, ExtractedThreshold)> = Vec::new();
    for w in bounds.windows(2) {
        let sentence = &tokens[w[0]..w[1]];
        for template in rules.threshold_templates() {
            if template.len() > sentence.len() {
                continue;
            }
            for start in 0..=sentence.len() - template.len() {
                let window = &sentence[start..start + template.len()];
                let mut value = None;
                let ok = template.iter().zip(window).enumerate().all(|(j, (part, tok))| match part {
                    None => match parse_number(&tok.text) {
                        Some(v) => {
                            value = Some((start + j, v));
                            true
                        }
                        None => false,
                    },
                    Some(lit) => *lit == tok.text,
                });
                let Some((value_pos, v)) = value.filter(|_| ok) else { continue };
                if !(0.0..=100.0).contains(&v) {
                    continue;
                }
                if let Some(next) = sentence.get(value_pos + 1) {
                    if rules.threshold_exclusions.contains(&next.text) {
                        continue;
                    }
                }
                let abs = w[0] + value_pos;
                if found.iter().any(|(p, _)| *p == abs) {
                    continue;
                }
                let span = Span { start: window[0].span.start, end: window[window.len() - 1].span.end };
                debug_assert!(span.end <= text.len());
                found.push((abs, ExtractedThreshold { value: v, span }));
            }
        }
    }
    found.sort_by_key(|(p, _)| *p);
    found.into_iter().map(|(_, t)| t).collect()
}

/// Numeric thresholds stated next to a threshold phrase.
pub fn extract_thresholds(text: &str, rules: &RuleSet) -> Vec<ExtractedThreshold> {
    find_thresholds(text, &tokenize(text), rules)
}

pub fn classify_explanation(text: &str, rules: &RuleSet) -> ExplanationVerdict {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return ExplanationVerdict::default();
    }
    let bounds = sentence_bounds(&tokens);
    let mut matches: Vec<KeyphraseMatch> = Vec::new();
    let phrases: Vec<(&str, &str, usize)> = rules
        .categories
        .iter()
        .flat_map(|c| c.keyphrases.iter().map(move |kp| (c.label.as_str(), kp.as_str(), kp.chars().count())))
        .collect();

    for w in bounds.windows(2) {
        let sentence = &tokens[w[0]..w[1]];
        for start in 0..sentence.len() {
            // best match per (label, start token)
            let mut best: Vec<KeyphraseMatch> = Vec::new();
            for len in 1..=MAX_WINDOW_TOKENS.min(sentence.len() - start) {
                let window = &sentence[start..start + len];
                if window.iter().any(|t| rules.is_negation_cue(&t.text)) {
                    break;
                }
                let candidate = join(window);
                let cand_len = candidate.chars().count();
                // a window belongs to the category whose keyphrase fits it best
                let mut per_window: Vec<KeyphraseMatch> = Vec::new();
                for &(label, kp, kp_len) in &phrases {
                    // the edit distance is at least the length difference
                    let longest = cand_len.max(kp_len) as f64;
                    if 1.0 - cand_len.abs_diff(kp_len) as f64 / longest < rules.similarity_threshold {
                        continue;
                    }
                    let sim = similarity(&candidate, kp);
                    if sim < rules.similarity_threshold {
                        continue;
                    }
                    if per_window.iter().any(|b| b.label == label && b.similarity >= sim) {
                        continue;
                    }
                    per_window.retain(|b| b.label != label);
                    per_window.push(KeyphraseMatch {
                        label: label.to_string(),
                        keyphrase: kp.to_string(),
                        span: Span { start: window[0].span.start, end: window[len - 1].span.end },
                        matched: text[window[0].span.start..window[len - 1].span.end].to_string(),
                        similarity: sim,
                        negated: detect_negation(sentence, start, &rules.negation_cues, rules.negation_window),
                    });
                }
                let top = per_window.iter().map(|m| m.similarity).fold(0.0, f64::max);
                for m in per_window.into_iter().filter(|m| m.similarity >= top) {
                    match best.iter_mut().find(|b| b.label == m.label) {
                        Some(b) if b.similarity >= m.similarity => {}
                        Some(b) => *b = m,
                        None => best.push(m),
                    }
                }
            }
            matches.extend(best);
        }
    }

    let mut labels: BTreeSet<String> = matches.iter().filter(|m| !m.negated).map(|m| m.label.clone()).collect();
    let extracted_thresholds = find_thresholds(text, &tokens, rules);
    if !extracted_thresholds.is_empty() {
        labels.remove(&rules.undefined_popularity_label);
        labels.insert(rules.threshold_label.clone());
    }
    ExplanationVerdict { labels, matches, extracted_thresholds }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> RuleSet {
        RuleSet::default_rules()
    }

    fn labels(text: &str) -> Vec<String> {
        classify_explanation(text, &rules()).labels.into_iter().collect()
    }

    #[test]
    fn exact_keyphrase() {
        assert!(labels("We averaged the ratings for each item and picked the top 10").contains(&"average".to_string()));
    }

    #[test]
    fn undefined_popularity() {
        assert_eq!(labels("I recommended the most popular items"), ["popularity_undefined"]);
        assert_eq!(labels("The recommendation includes items that are well-liked by the group"), ["popularity_undefined"]);
    }

    #[test]
    fn negated_average_with_similarity() {
        assert_eq!(labels("We did not average the ratings; instead we looked at user similarity"), ["user_similarity"]);
    }

    #[test]
    fn popularity_with_threshold() {
        let v = classify_explanation("I picked popular items with ratings above 70.", &rules());
        assert!(v.has("popularity_threshold"));
        assert!(!v.has("popularity_undefined"));
        assert_eq!(v.extracted_thresholds.len(), 1);
        assert_eq!(v.extracted_thresholds[0].value, 70.0);
    }

    #[test]
    fn negation_window() {
        let cues: Vec<String> = ["not", "no", "never"].iter().map(|s| s.to_string()).collect();
        let toks = tokenize("did not average");
        assert!(detect_negation(&toks, 2, &cues, 3));
        let toks = tokenize("we averaged");
        assert!(!detect_negation(&toks, 1, &cues, 3));
        // cue four tokens before the span, window three
        let toks = tokenize("not a b c average");
        assert!(!detect_negation(&toks, 4, &cues, 3));
        assert!(detect_negation(&toks, 4, &cues, 4));
    }

    #[test]
    fn thresholds() {
        let r = rules();
        let t = extract_thresholds("items with ratings above 70", &r);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].value, 70.0);
        assert_eq!(t[0].span.slice("items with ratings above 70"), "above 70");
        assert!(extract_thresholds("well-liked by the group", &r).is_empty());
        let t = extract_thresholds("scores above 60 or above 80", &r);
        assert_eq!(t.iter().map(|t| t.value).collect::<Vec<_>>(), [60.0, 80.0]);
        // counts of users are not ratings
        assert!(extract_thresholds("liked by more than 2 users", &r).is_empty());
        assert!(extract_thresholds("above 150", &r).is_empty());
        // one value matched by two templates is captured once
        assert_eq!(extract_thresholds("rated 80 or higher", &r).len(), 1);
    }

    #[test]
    fn empty_text_gives_empty_verdict() {
        assert_eq!(classify_explanation("  \n ", &rules()), ExplanationVerdict::default());
    }

    #[test]
    fn fuzzy_typo_still_matches() {
        // "averge" vs "average": one edit over seven chars
        assert!(labels("I took the averge of all ratings").contains(&"average".to_string()));
    }

    #[test]
    fn self_similarity_is_one() {
        for cat in &rules().categories {
            for kp in &cat.keyphrases {
                assert_eq!(similarity(kp, kp), 1.0);
            }
        }
    }

    #[test]
    fn window_goes_to_the_closest_category() {
        // "minimum rating" is within 0.86 of "maximum rating"
        assert!(similarity("minimum rating", "maximum rating") >= 0.85);
        assert_eq!(labels("Items are ranked by their minimum rating."), ["least_misery"]);
        assert_eq!(labels("Items are ranked by their maximum rating."), ["most_pleasure"]);
        assert_eq!(labels("I measured the similarity between items."), ["item_similarity"]);
    }
}
