//! Social choice aggregation strategies and the random baseline.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scenario::GroupScenario;

/// Approval threshold used when none is given: midpoint of the 0–100 scale.
pub const DEFAULT_APPROVAL_THRESHOLD: u8 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    /// Additive utilitarian: sum of ratings.
    Add,
    /// Most pleasure: highest individual rating.
    Mpl,
    /// Least misery: lowest individual rating.
    Lms,
    /// Approval voting: number of users rating at or above the threshold.
    App(u8),
}

impl StrategyKind {
    pub const fn app() -> Self {
        StrategyKind::App(DEFAULT_APPROVAL_THRESHOLD)
    }

    /// The four strategies with the default approval threshold.
    pub fn standard() -> [StrategyKind; 4] {
        [StrategyKind::Add, StrategyKind::Mpl, StrategyKind::Lms, StrategyKind::app()]
    }

    /// Short name without the threshold, e.g. `APP`.
    pub fn family(&self) -> &'static str {
        match self {
            StrategyKind::Add => "ADD",
            StrategyKind::Mpl => "MPL",
            StrategyKind::Lms => "LMS",
            StrategyKind::App(_) => "APP",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::App(t) => write!(f, "APP({t})"),
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let upper = s.to_ascii_uppercase();
        match upper.as_str() {
            "ADD" => return Ok(StrategyKind::Add),
            "MPL" => return Ok(StrategyKind::Mpl),
            "LMS" => return Ok(StrategyKind::Lms),
            "APP" => return Ok(StrategyKind::app()),
            _ => {}
        }
        let threshold = upper
            .strip_prefix("APP(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| upper.strip_prefix("APP:"))
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))?;
        let t: u8 = threshold
            .trim()
            .parse()
            .ok()
            .filter(|t| *t <= crate::scenario::MAX_RATING)
            .ok_or_else(|| Error::Config(format!("approval threshold in {s:?} must be an integer in [0, 100]")))?;
        Ok(StrategyKind::App(t))
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-item strategy scores, indexed like the scenario's items.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemScores {
    pub items: Vec<String>,
    pub scores: Vec<f64>,
}

impl ItemScores {
    pub fn get(&self, item: &str) -> Option<f64> {
        self.items.iter().position(|i| i == item).map(|p| self.scores[p])
    }

    /// Item indices ordered by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut r = self.ranking();
        r.truncate(k);
        r
    }

    pub fn scaled(&self, factor: f64) -> ItemScores {
        ItemScores { items: self.items.clone(), scores: self.scores.iter().map(|s| s * factor).collect() }
    }
}

pub fn strategy_scores(scenario: &GroupScenario, strategy: StrategyKind) -> ItemScores {
    let scores = (0..scenario.num_items())
        .map(|i| {
            let col = scenario.item_column(i);
            match strategy {
                StrategyKind::Add => col.map(f64::from).sum(),
                StrategyKind::Mpl => col.max().map_or(0.0, f64::from),
                StrategyKind::Lms => col.min().map_or(0.0, f64::from),
                StrategyKind::App(t) => col.filter(|&r| r >= t).count() as f64,
            }
        })
        .collect();
    ItemScores { items: scenario.items.clone(), scores }
}

/// An ordered top-k list.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub source: String,
    pub entries: Vec<(String, f64)>,
    pub k: usize,
}

#[derive(Serialize, Deserialize)]
struct RankedListWire {
    source: String,
    items: Vec<String>,
    scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl Serialize for RankedList {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RankedListWire {
            source: self.source.clone(),
            items: self.items().map(str::to_string).collect(),
            scores: self.entries.iter().map(|(_, s)| *s).collect(),
            k: Some(self.k),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RankedList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let w = RankedListWire::deserialize(deserializer)?;
        if w.items.len() != w.scores.len() {
            return Err(serde::de::Error::custom(format!("{} items but {} scores", w.items.len(), w.scores.len())));
        }
        let k = w.k.unwrap_or(w.items.len());
        Ok(RankedList { source: w.source, entries: w.items.into_iter().zip(w.scores).collect(), k })
    }
}

impl RankedList {
    /// A list with unset (zero) scores, as produced by generators that only
    /// return an order.
    pub fn unscored(source: impl Into<String>, items: Vec<String>, k: usize) -> Self {
        RankedList { source: source.into(), entries: items.into_iter().map(|i| (i, 0.0)).collect(), k }
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(i, _)| i.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Top-k items of `strategy` on `scenario`, ties broken by ascending item index.
pub fn aggregate(scenario: &GroupScenario, strategy: StrategyKind, k: usize) -> RankedList {
    let scores = strategy_scores(scenario, strategy);
    let entries = scores.top_k(k).into_iter().map(|i| (scores.items[i].clone(), scores.scores[i])).collect();
    RankedList { source: format!("strategy:{strategy}"), entries, k }
}

/// Uniformly random ordered sample of `k` distinct items.
pub fn random_recommendation(scenario: &GroupScenario, k: usize, seed: u64) -> Result<RankedList> {
    let n = scenario.num_items();
    if k > n {
        return Err(Error::Dimension(format!("k = {k} exceeds the {n} available items")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    let (picked, _) = idx.partial_shuffle(&mut rng, k);
    let items = picked.iter().map(|&i| scenario.items[i].clone()).collect();
    Ok(RankedList::unscored("random", items, k))
}
