use std::collections::BTreeSet;

use grouprec::explain::{classify_explanation, cohens_kappa, default_fixtures, extract_thresholds, fixture_agreement, RuleSet};
use grouprec::Error;
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "i", "the", "ratings", "average", "averge", "sum", "total", "score", "lowest", "highest", "rating", "users", "similar", "items",
    "popular", "not", "no", "above", "70", "or", "higher", "diverse", "approval", "votes", "minimum", "maximum", "mean", "group", "least",
    "misery", "most", "pleasure", "at", "least", "50", "and", "by", ".", ",", ";",
];

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(default_fixtures().into_iter().map(|f| f.text).collect::<Vec<_>>()),
        prop::collection::vec(prop::sample::select(WORDS), 1..30).prop_map(|w| w.join(" ")),
    ]
}

const FILLER: &[&str] = &[
    "we", "hope", "everyone", "enjoys", "this", "evening", "together", "plan", "looks", "good", "for", "a", "weekend", "it", "should",
    "be", "fun", "thanks", "here", "is", "list", "final",
];

fn filler() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(FILLER), 1..12).prop_map(|w| {
        let mut s = w.join(" ");
        s.push('.');
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn deterministic(t in text()) {
        let a = classify_explanation(&t, &RuleSet::default_rules());
        let b = classify_explanation(&t, &RuleSet::default_rules());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn raising_the_threshold_never_adds_a_match(t in text(), lo in 0.5f64..1.0, hi in 0.5f64..1.0) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let mut loose = RuleSet::default_rules();
        loose.similarity_threshold = lo;
        let mut strict = RuleSet::default_rules();
        strict.similarity_threshold = hi;
        let key = |r: &RuleSet| -> BTreeSet<(String, usize, usize, bool)> {
            classify_explanation(&t, r).matches.into_iter().map(|m| (m.label, m.span.start, m.span.end, m.negated)).collect()
        };
        let (l, s) = (key(&loose), key(&strict));
        prop_assert!(s.is_subset(&l), "{:?} not within {:?}", s, l);
    }

    #[test]
    fn appending_neutral_sentence_keeps_labels(t in text(), extra in filler()) {
        let rules = RuleSet::default_rules();
        prop_assume!(classify_explanation(&extra, &rules).matches.is_empty());
        prop_assume!(extract_thresholds(&extra, &rules).is_empty());
        let before = classify_explanation(&t, &rules).labels;
        let after = classify_explanation(&format!("{t}. {extra}"), &rules).labels;
        prop_assert!(before.is_subset(&after), "{:?} -> {:?}", before, after);
    }
}

#[test]
fn negation_soundness_over_every_cue_and_keyphrase() {
    let rules = RuleSet::default_rules();
    let mut checked = 0;
    for cat in &rules.categories {
        for kp in &cat.keyphrases {
            let plain = classify_explanation(kp, &rules);
            assert!(plain.has(&cat.label), "{kp:?} alone should give {}: {:?}", cat.label, plain.labels);
            for cue in &rules.negation_cues {
                let negated = classify_explanation(&format!("{cue} {kp}"), &rules);
                assert!(!negated.has(&cat.label), "{cue} {kp}: {:?}", negated.labels);
                checked += 1;
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn negation_does_not_cross_sentences() {
    let rules = RuleSet::default_rules();
    assert!(classify_explanation("That was not it. The average decided.", &rules).has("average"));
    assert!(!classify_explanation("That was not the average.", &rules).has("average"));
}

#[test]
fn negation_window_is_three_tokens() {
    let rules = RuleSet::default_rules();
    assert!(!classify_explanation("not really the average", &rules).has("average"));
    assert!(classify_explanation("not really about the average", &rules).has("average"));
}

#[test]
fn every_label_has_a_non_negated_match() {
    let rules = RuleSet::default_rules();
    for f in default_fixtures() {
        let v = classify_explanation(&f.text, &rules);
        for l in &v.labels {
            if *l == rules.threshold_label {
                assert!(!v.extracted_thresholds.is_empty());
            } else {
                assert!(v.matches.iter().any(|m| m.label == *l && !m.negated), "{}: {l}", f.text);
            }
        }
    }
}

#[test]
fn shipped_fixtures_agree_with_the_classifier() {
    let rows = fixture_agreement(&default_fixtures(), &RuleSet::default_rules()).unwrap();
    for row in &rows {
        let k = row.kappa.expect("every label occurs in the fixtures");
        assert!(k >= 0.9, "{}: κ = {k:.3}", row.label);
    }
}

#[test]
fn kappa_examples() {
    let set = |l: &[&str]| l.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let a = vec![set(&["x"]), set(&[]), set(&["x"]), set(&[])];
    let b = vec![set(&["x"]), set(&[]), set(&[]), set(&[])];
    assert!((cohens_kappa(&a, &b, "x").unwrap() - 0.5).abs() < 1e-12);
    assert!(matches!(cohens_kappa(&b, &b, "y"), Err(Error::UndefinedKappa)));
}

#[test]
fn threshold_extraction_cases() {
    let rules = RuleSet::default_rules();
    let values = |t: &str| extract_thresholds(t, &rules).into_iter().map(|x| x.value).collect::<Vec<_>>();
    assert_eq!(values("items rated above 70 by everyone"), [70.0]);
    assert_eq!(values("at least 3 users liked it"), Vec::<f64>::new());
    assert_eq!(values("scores of 80 or higher, and over 65 for the rest"), [80.0, 65.0]);
    assert_eq!(values("above 150"), Vec::<f64>::new());
    assert_eq!(values("above seventy"), Vec::<f64>::new());
}
