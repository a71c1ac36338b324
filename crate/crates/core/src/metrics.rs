//! NDCG@k scoring against strategy references, plus report statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregation::{ItemScores, RankedList, StrategyKind};
use crate::error::{Error, Result};
use crate::structure::StructureClass;

/// How a reference turns an item into a gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKind {
    /// The item's reference strategy score.
    #[default]
    Linear,
    /// 1 if the item is in the reference's tie-broken top-k, else 0.
    Binary,
}

impl fmt::Display for GainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GainKind::Linear => "linear",
            GainKind::Binary => "binary",
        })
    }
}

impl FromStr for GainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(GainKind::Linear),
            "binary" => Ok(GainKind::Binary),
            other => Err(Error::Config(format!("unknown gain kind {other:?}"))),
        }
    }
}

fn discount(position: usize) -> f64 {
    1.0 / ((position + 2) as f64).log2()
}

/// NDCG@k of `candidate` with linear gains taken from `reference`.
pub fn ndcg_at_k(candidate: &RankedList, reference: &ItemScores, k: usize) -> Result<f64> {
    ndcg_at_k_with(candidate, reference, k, GainKind::Linear)
}

pub fn ndcg_at_k_with(candidate: &RankedList, reference: &ItemScores, k: usize, gain: GainKind) -> Result<f64> {
    let ideal = reference.top_k(k);
    let gain_of = |idx: usize| match gain {
        GainKind::Linear => reference.scores[idx],
        GainKind::Binary => {
            if ideal.contains(&idx) {
                1.0
            } else {
                0.0
            }
        }
    };

    let mut positions = Vec::with_capacity(k.min(candidate.len()));
    for item in candidate.items().take(k) {
        let idx = reference
            .items
            .iter()
            .position(|i| i == item)
            .ok_or_else(|| Error::Validation(format!("unknown item {item:?} in candidate")))?;
        positions.push(idx);
    }

    let dcg: f64 = positions.iter().enumerate().map(|(p, &i)| gain_of(i) * discount(p)).sum();
    let idcg: f64 = ideal.iter().enumerate().map(|(p, &i)| gain_of(i) * discount(p)).sum();
    if idcg <= 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((dcg / idcg).clamp(0.0, 1.0))
}

/// One scored (scenario, generator, strategy) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub scenario_id: String,
    pub generator: String,
    pub strategy: StrategyKind,
    pub ndcg: f64,
    pub item_count: usize,
    pub structure: StructureClass,
    pub normalized_distance: f64,
}

/// A unit that produced no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub scenario_id: String,
    pub generator: String,
    pub item_count: usize,
    /// Set when only one strategy failed (degenerate reference).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReportKey {
    pub generator: String,
    pub strategy: StrategyKind,
    pub item_count: usize,
}

impl ReportKey {
    fn of(r: &EvalRecord) -> Self {
        ReportKey { generator: r.generator.clone(), strategy: r.strategy, item_count: r.item_count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanCell {
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureCount {
    pub failed: usize,
    pub attempted: usize,
}

impl FailureCount {
    pub fn rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failed as f64 / self.attempted as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub means: BTreeMap<ReportKey, MeanCell>,
    /// Keyed by (generator, item count); counts whole units, not strategies.
    pub failures: BTreeMap<(String, usize), FailureCount>,
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: usize,
}

/// Mean NDCG per (generator, strategy, item count).
pub fn summarize(records: &[EvalRecord], failures: &[FailureRecord]) -> Result<Summary> {
    if records.is_empty() && failures.is_empty() {
        return Err(Error::Validation("nothing to summarize".into()));
    }
    let mut acc: BTreeMap<ReportKey, Acc> = BTreeMap::new();
    for r in records {
        let a = acc.entry(ReportKey::of(r)).or_default();
        a.sum += r.ndcg;
        a.n += 1;
    }
    let means = acc.into_iter().map(|(k, a)| (k, MeanCell { mean: a.sum / a.n as f64, n: a.n })).collect();

    let mut units: BTreeMap<(String, usize), HashSet<&str>> = BTreeMap::new();
    for r in records {
        units.entry((r.generator.clone(), r.item_count)).or_default().insert(&r.scenario_id);
    }
    let mut failed: BTreeMap<(String, usize), HashSet<&str>> = BTreeMap::new();
    for f in failures.iter().filter(|f| f.strategy.is_none()) {
        let key = (f.generator.clone(), f.item_count);
        units.entry(key.clone()).or_default().insert(&f.scenario_id);
        failed.entry(key).or_default().insert(&f.scenario_id);
    }
    let failures = units
        .into_iter()
        .map(|(k, all)| {
            let failed = failed.get(&k).map_or(0, HashSet::len);
            (k, FailureCount { failed, attempted: all.len() })
        })
        .collect();
    Ok(Summary { means, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub key: ReportKey,
    pub uniform_mean: f64,
    pub divergent_mean: f64,
    pub uniform_n: usize,
    pub divergent_n: usize,
    /// Uniform mean minus divergent mean; positive favours uniform groups.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DeltaReport {
    pub entries: Vec<DeltaEntry>,
    /// Keys left out because one class had no records.
    pub omitted: Vec<ReportKey>,
}

/// ΔNDCG per (generator, strategy, item count); intermediates are ignored.
pub fn delta_ndcg(records: &[EvalRecord]) -> DeltaReport {
    let mut by_key: BTreeMap<ReportKey, (Acc, Acc)> = BTreeMap::new();
    for r in records {
        let (u, d) = by_key.entry(ReportKey::of(r)).or_default();
        match r.structure {
            StructureClass::Uniform => {
                u.sum += r.ndcg;
                u.n += 1;
            }
            StructureClass::Divergent => {
                d.sum += r.ndcg;
                d.n += 1;
            }
            StructureClass::Intermediate => {}
        }
    }
    let mut report = DeltaReport::default();
    for (key, (u, d)) in by_key {
        if u.n == 0 || d.n == 0 {
            log::warn!(
                "ΔNDCG omitted for {} / {} / {} items: no {} groups",
                key.generator,
                key.strategy,
                key.item_count,
                if u.n == 0 { "uniform" } else { "divergent" }
            );
            report.omitted.push(key);
            continue;
        }
        let uniform_mean = u.sum / u.n as f64;
        let divergent_mean = d.sum / d.n as f64;
        report.entries.push(DeltaEntry {
            key,
            uniform_mean,
            divergent_mean,
            uniform_n: u.n,
            divergent_n: d.n,
            delta: uniform_mean - divergent_mean,
        });
    }
    report
}
