//! Report tables rendered from run outcomes.
//!
//! Every table is emitted as CSV (long form) and markdown (wide form). Output
//! is a pure function of the outcomes: they are re-sorted before aggregation
//! and all numbers use fixed precision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::run::UnitOutcome;
use crate::aggregation::StrategyKind;
use crate::error::{Error, Result};
use crate::explain::RuleSet;
use crate::metrics::{delta_ndcg, summarize, EvalRecord, FailureRecord};
use crate::structure::StructureClass;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reports {
    /// File name → contents.
    pub files: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl Reports {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }
}

pub const NDCG_CSV: &str = "ndcg_by_items.csv";
pub const NDCG_MD: &str = "ndcg_by_items.md";
pub const CATEGORIES_CSV: &str = "categories_by_items.csv";
pub const CATEGORIES_MD: &str = "categories_by_items.md";
pub const STRUCTURE_CSV: &str = "categories_by_structure.csv";
pub const STRUCTURE_MD: &str = "categories_by_structure.md";
pub const DELTA_CSV: &str = "delta_ndcg.csv";
pub const DELTA_MD: &str = "delta_ndcg.md";

/// Share (in percent) of parsed explanations carrying each label, grouped by
/// `group_of`. Units without an explanation are not counted.
pub fn category_percentages<K: Ord + Clone>(
    outcomes: &[UnitOutcome],
    labels: &[String],
    group_of: impl Fn(&UnitOutcome) -> Option<K>,
) -> BTreeMap<K, (usize, BTreeMap<String, f64>)> {
    let mut counts: BTreeMap<K, (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    for o in outcomes {
        let (Some(v), Some(key)) = (&o.verdict, group_of(o)) else { continue };
        let entry = counts.entry(key).or_default();
        entry.0 += 1;
        for l in labels {
            if v.labels.contains(l) {
                *entry.1.entry(l.clone()).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(k, (n, c))| {
            let pct = labels.iter().map(|l| (l.clone(), 100.0 * c.get(l).copied().unwrap_or(0) as f64 / n as f64)).collect();
            (k, (n, pct))
        })
        .collect()
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_rule(n: usize) -> String {
    format!("|{}\n", "---|".repeat(n))
}

pub fn render_reports(outcomes: &[UnitOutcome], rules: &RuleSet) -> Result<Reports> {
    if outcomes.is_empty() {
        return Err(Error::Validation("no outcomes to report".into()));
    }
    let mut sorted: Vec<&UnitOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| (&a.generator, &a.scenario_id).cmp(&(&b.generator, &b.scenario_id)));
    let outcomes: Vec<UnitOutcome> = sorted.into_iter().cloned().collect();

    let records: Vec<EvalRecord> = outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect();
    let failures: Vec<FailureRecord> = outcomes.iter().flat_map(|o| o.failures.iter().cloned()).collect();
    let mut reports = Reports::default();

    // mean NDCG per generator × strategy × item count
    let summary = summarize(&records, &failures)?;
    let generators: BTreeSet<&str> = outcomes.iter().map(|o| o.generator.as_str()).collect();
    let strategies: BTreeSet<StrategyKind> = records.iter().map(|r| r.strategy).collect();
    let sizes: BTreeSet<usize> = outcomes.iter().map(|o| o.item_count).collect();

    let mut csv = String::from("generator,strategy,item_count,mean_ndcg,n\n");
    for (key, cell) in &summary.means {
        writeln!(csv, "{},{},{},{:.4},{}", key.generator, key.strategy, key.item_count, cell.mean, cell.n).unwrap();
    }
    csv.push_str("\ngenerator,item_count,failed,attempted,failure_rate\n");
    for ((g, size), f) in &summary.failures {
        writeln!(csv, "{g},{size},{},{},{:.4}", f.failed, f.attempted, f.rate()).unwrap();
    }
    reports.files.insert(NDCG_CSV.into(), csv);

    let mut header = vec!["generator".to_string()];
    for s in &strategies {
        for size in &sizes {
            header.push(format!("{s} {size}"));
        }
    }
    for size in &sizes {
        header.push(format!("fail% {size}"));
    }
    let mut md = String::from("## Mean NDCG@k by strategy and item count\n\n");
    md.push_str(&md_row(&header));
    md.push_str(&md_rule(header.len()));
    for g in &generators {
        let mut row = vec![g.to_string()];
        for s in &strategies {
            for size in &sizes {
                let cell = summary.means.iter().find(|(k, _)| k.generator == *g && k.strategy == *s && k.item_count == *size);
                row.push(cell.map_or("-".into(), |(_, c)| format!("{:.2}", c.mean)));
            }
        }
        for size in &sizes {
            let f = summary.failures.get(&(g.to_string(), *size));
            row.push(f.map_or("-".into(), |f| format!("{:.1}", 100.0 * f.rate())));
        }
        md.push_str(&md_row(&row));
    }
    reports.files.insert(NDCG_MD.into(), md);

    // category percentages
    let labels = rules.all_labels();
    let by_items = category_percentages(&outcomes, &labels, |o| Some((o.generator.clone(), o.item_count)));
    let by_structure = category_percentages(&outcomes, &labels, |o| match o.structure {
        StructureClass::Intermediate => None,
        s => Some((o.generator.clone(), s)),
    });
    let mut csv = String::from("generator,item_count,label,percent,n\n");
    for ((g, size), (n, pct)) in &by_items {
        for (l, p) in pct {
            writeln!(csv, "{g},{size},{l},{p:.2},{n}").unwrap();
        }
    }
    reports.files.insert(CATEGORIES_CSV.into(), csv);
    let mut csv = String::from("generator,structure,label,percent,n\n");
    for ((g, s), (n, pct)) in &by_structure {
        for (l, p) in pct {
            writeln!(csv, "{g},{s},{l},{p:.2},{n}").unwrap();
        }
    }
    reports.files.insert(STRUCTURE_CSV.into(), csv);

    let table = |title: &str, first: &str, second: &str, rows: Vec<(String, String, usize, &BTreeMap<String, f64>)>| {
        let mut md = format!("## {title}\n\n");
        let mut header = vec![first.to_string(), second.to_string(), "n".to_string()];
        header.extend(labels.iter().cloned());
        md.push_str(&md_row(&header));
        md.push_str(&md_rule(header.len()));
        for (a, b, n, pct) in rows {
            let mut row = vec![a, b, n.to_string()];
            row.extend(labels.iter().map(|l| format!("{:.1}", pct[l])));
            md.push_str(&md_row(&row));
        }
        md
    };
    reports.files.insert(
        CATEGORIES_MD.into(),
        table(
            "Explanation categories (% of parsed explanations) by item count",
            "generator",
            "items",
            by_items.iter().map(|((g, s), (n, p))| (g.clone(), s.to_string(), *n, p)).collect(),
        ),
    );
    reports.files.insert(
        STRUCTURE_MD.into(),
        table(
            "Explanation categories (% of parsed explanations) by group structure",
            "generator",
            "structure",
            by_structure.iter().map(|((g, s), (n, p))| (g.clone(), s.to_string(), *n, p)).collect(),
        ),
    );

    // ΔNDCG
    let delta = delta_ndcg(&records);
    let mut csv = String::from("generator,strategy,item_count,uniform_mean,divergent_mean,delta,uniform_n,divergent_n\n");
    for e in &delta.entries {
        writeln!(
            csv,
            "{},{},{},{:.4},{:.4},{:.4},{},{}",
            e.key.generator, e.key.strategy, e.key.item_count, e.uniform_mean, e.divergent_mean, e.delta, e.uniform_n, e.divergent_n
        )
        .unwrap();
    }
    reports.files.insert(DELTA_CSV.into(), csv);
    let mut md = String::from("## ΔNDCG@k (uniform − divergent; positive favours uniform groups)\n\n");
    let mut header = vec!["generator".to_string(), "strategy".to_string()];
    header.extend(sizes.iter().map(|s| s.to_string()));
    md.push_str(&md_row(&header));
    md.push_str(&md_rule(header.len()));
    let pairs: BTreeSet<(&str, StrategyKind)> = delta.entries.iter().map(|e| (e.key.generator.as_str(), e.key.strategy)).collect();
    for (g, s) in pairs {
        let mut row = vec![g.to_string(), s.to_string()];
        for size in &sizes {
            let e = delta.entries.iter().find(|e| e.key.generator == g && e.key.strategy == s && e.key.item_count == *size);
            row.push(e.map_or("-".into(), |e| format!("{:+.3}", e.delta)));
        }
        md.push_str(&md_row(&row));
    }
    for k in &delta.omitted {
        let w = format!("omitted {} / {} / {} items: one structure class is empty", k.generator, k.strategy, k.item_count);
        writeln!(md, "\n> {w}").unwrap();
        reports.warnings.push(w);
    }
    reports.files.insert(DELTA_MD.into(), md);

    Ok(reports)
}
