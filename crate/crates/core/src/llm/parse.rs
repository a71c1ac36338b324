use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::aggregation::RankedList;
use crate::scenario::{item_label, GroupScenario};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed(String),
}

impl ParseStatus {
    pub fn is_usable(&self) -> bool {
        !matches!(self, ParseStatus::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorResponse {
    pub raw_text: String,
    pub recommendation: RankedList,
    pub explanation: String,
    pub parse_status: ParseStatus,
}

/// Canonical `item_<n>` spelling of an item reference such as `"Item 3"`,
/// `"item3"`, `"ITEM-03"` or `"item_3"`.
pub fn normalize_item(raw: &str) -> Option<String> {
    let s = raw.trim().trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '[' | ']' | '(' | ')' | '.'));
    let lower = s.to_ascii_lowercase();
    let rest = lower.strip_prefix("item")?;
    let digits = rest.trim_start_matches([' ', '_', '-', '#', ':']);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: usize = digits.parse().ok()?;
    (n >= 1).then(|| item_label(n - 1))
}

/// Byte ranges of balanced `{...}` candidates, in order of their opening brace.
fn balanced_objects(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    bytes.iter().enumerate().filter(|(_, &b)| b == b'{').filter_map(move |(start, _)| {
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&text[start..=i]);
                    }
                }
                _ => {}
            }
        }
        None
    })
}

fn first_object(text: &str) -> Option<Map<String, Value>> {
    balanced_objects(text).find_map(|c| match serde_json::from_str::<Value>(c) {
        Ok(Value::Object(m)) => Some(m),
        _ => None,
    })
}

fn lookup<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).or_else(|| obj.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case(key)).map(|(_, v)| v))
}

fn failed(raw: &str, k: usize, reason: impl Into<String>) -> GeneratorResponse {
    GeneratorResponse {
        raw_text: raw.to_string(),
        recommendation: RankedList::unscored("unparsed", Vec::new(), k),
        explanation: String::new(),
        parse_status: ParseStatus::Failed(reason.into()),
    }
}

/// Extracts the recommendation and explanation from free model output.
/// Never panics; every input maps to ok, repaired or failed.
pub fn parse_response(raw_text: &str, scenario: &GroupScenario, k: usize) -> GeneratorResponse {
    let Some(obj) = first_object(raw_text) else {
        return failed(raw_text, k, "no_object");
    };
    let (Some(rec), Some(expl)) = (lookup(&obj, "recommendation"), lookup(&obj, "explanation")) else {
        return failed(raw_text, k, "missing_key");
    };
    let mut repaired = false;

    let raw_items: Vec<String> = match rec {
        Value::Array(values) => {
            let mut out = Vec::with_capacity(values.len());
            for v in values {
                match v {
                    Value::String(s) => out.push(s.clone()),
                    Value::Number(n) => out.push(format!("item_{n}")),
                    other => return failed(raw_text, k, format!("invalid_item:{other}")),
                }
            }
            out
        }
        Value::String(s) => {
            repaired = true;
            s.split([',', ';', '\n']).map(str::trim).filter(|p| !p.is_empty()).map(str::to_string).collect()
        }
        _ => return failed(raw_text, k, "recommendation_not_a_list"),
    };

    let explanation = match expl {
        Value::String(s) => s.trim().to_string(),
        Value::Null => String::new(),
        Value::Array(parts) => {
            repaired = true;
            parts.iter().map(|p| p.as_str().map(str::to_string).unwrap_or_else(|| p.to_string())).collect::<Vec<_>>().join(" ")
        }
        other => {
            repaired = true;
            other.to_string()
        }
    };
    if explanation.is_empty() {
        return failed(raw_text, k, "empty_explanation");
    }

    let mut items = Vec::with_capacity(k);
    for raw in raw_items.iter().take(k) {
        let Some(item) = normalize_item(raw).filter(|i| scenario.item_position(i).is_some()) else {
            return failed(raw_text, k, format!("unknown_item:{raw}"));
        };
        items.push(item);
    }
    if raw_items.len() > k {
        repaired = true;
    }
    let mut seen = HashSet::new();
    if let Some(dup) = items.iter().find(|i| !seen.insert(i.as_str())) {
        return failed(raw_text, k, format!("duplicate_item:{dup}"));
    }
    let expected = k.min(scenario.num_items());
    if items.len() < expected {
        return failed(raw_text, k, format!("too_few_items:{}", items.len()));
    }

    GeneratorResponse {
        raw_text: raw_text.to_string(),
        recommendation: RankedList::unscored("response", items, k),
        explanation,
        parse_status: if repaired { ParseStatus::Repaired } else { ParseStatus::Ok },
    }
}
