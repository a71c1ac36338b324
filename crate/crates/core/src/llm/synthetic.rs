use serde_json::json;

use crate::aggregation::{aggregate, StrategyKind};
use crate::scenario::GroupScenario;

const ADD: &[&str] = &[
    "I summed the ratings of all users for every item and recommended the {k} items with the highest total score.",
    "I averaged the ratings of all group members for each item and recommended the {k} items with the highest average rating.",
];
const MPL: &[&str] = &[
    "For each item I looked at the highest individual rating any group member gave it and recommended the {k} items with the maximum rating.",
    "I followed a most pleasure approach: an item is ranked by the highest single rating it received from any user.",
];
const LMS: &[&str] = &[
    "For each item I took the lowest rating given by any group member and recommended the {k} items whose lowest rating was highest, so the least satisfied member stays as happy as possible.",
    "I applied least misery: items are ranked by their minimum rating across users.",
];
const APP: &[&str] = &[
    "Each user approved an item when they rated it at or above {t}. I counted the approvals for every item and recommended the {k} items with the most approvals.",
    "I used approval voting: I counted how many users rated each item at or above {t} and picked the items with the most votes.",
];

fn templates(strategy: StrategyKind) -> &'static [&'static str] {
    match strategy {
        StrategyKind::Add => ADD,
        StrategyKind::Mpl => MPL,
        StrategyKind::Lms => LMS,
        StrategyKind::App(_) => APP,
    }
}

pub fn synthetic_template_count(strategy: StrategyKind) -> usize {
    templates(strategy).len()
}

/// The explanation category the given template is written to trigger.
pub fn synthetic_category(strategy: StrategyKind, template_id: usize) -> &'static str {
    match strategy {
        StrategyKind::Add if template_id.is_multiple_of(ADD.len()) => "sum",
        StrategyKind::Add => "average",
        StrategyKind::Mpl => "most_pleasure",
        StrategyKind::Lms => "least_misery",
        StrategyKind::App(_) => "approval",
    }
}

/// A well-formed response that replays `strategy` and describes it truthfully.
/// `template_id` wraps around the available phrasings.
pub fn synthetic_generator(scenario: &GroupScenario, strategy: StrategyKind, k: usize, template_id: usize) -> String {
    let list = aggregate(scenario, strategy, k);
    let pool = templates(strategy);
    let mut explanation = pool[template_id % pool.len()].replace("{k}", &k.to_string());
    if let StrategyKind::App(t) = strategy {
        explanation = explanation.replace("{t}", &t.to_string());
    }
    json!({
        "recommendation": list.items().collect::<Vec<_>>(),
        "explanation": explanation,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{classify_explanation, extract_thresholds, RuleSet};
    use crate::llm::parse_response;

    fn s1() -> GroupScenario {
        GroupScenario::from_ratings("S1", vec![vec![10, 50, 90], vec![30, 40, 20]], 0).unwrap()
    }

    #[test]
    fn add_replays_aggregation() {
        let raw = synthetic_generator(&s1(), StrategyKind::Add, 3, 0);
        let r = parse_response(&raw, &s1(), 3);
        assert_eq!(r.recommendation.items().collect::<Vec<_>>(), ["item_3", "item_2", "item_1"]);
        let rules = RuleSet::default_rules();
        for t in 0..synthetic_template_count(StrategyKind::Add) {
            let r = parse_response(&synthetic_generator(&s1(), StrategyKind::Add, 3, t), &s1(), 3);
            let v = classify_explanation(&r.explanation, &rules);
            assert!(v.has("average") || v.has("sum"), "{:?}", v.labels);
        }
    }

    #[test]
    fn app_states_its_threshold() {
        let raw = synthetic_generator(&s1(), StrategyKind::App(50), 3, 0);
        let r = parse_response(&raw, &s1(), 3);
        assert_eq!(r.recommendation.items().collect::<Vec<_>>(), ["item_2", "item_3", "item_1"]);
        assert!(r.explanation.contains("above 50"));
        let t = extract_thresholds(&r.explanation, &RuleSet::default_rules());
        assert_eq!(t.iter().map(|t| t.value).collect::<Vec<_>>(), [50.0]);
    }

    #[test]
    fn every_template_names_its_strategy() {
        let rules = RuleSet::default_rules();
        for st in StrategyKind::standard() {
            for t in 0..synthetic_template_count(st) {
                let raw = synthetic_generator(&s1(), st, 3, t);
                let r = parse_response(&raw, &s1(), 3);
                let v = classify_explanation(&r.explanation, &rules);
                assert!(v.has(synthetic_category(st, t)), "{st} template {t}: {:?}", v.labels);
            }
        }
    }
}
