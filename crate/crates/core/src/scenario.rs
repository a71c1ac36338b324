//! Randomized, anonymized group scenarios.
//!
//! A scenario is a dense `U × I` matrix of integer ratings on the 0–100 scale.
//! Users are labelled `User_1..User_U` and items `item_1..item_I`; no domain
//! cues are attached. Generation is a pure function of the seed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed;

pub const MIN_RATING: u8 = 0;
pub const MAX_RATING: u8 = 100;

/// Header token of the first table column.
pub const USER_ID_HEADER: &str = "user_id";

pub fn user_label(index: usize) -> String {
    format!("User_{}", index + 1)
}

pub fn item_label(index: usize) -> String {
    format!("item_{}", index + 1)
}

/// Zero-based index of an `item_<n>` label.
pub fn item_index(label: &str) -> Option<usize> {
    let n: usize = label.strip_prefix("item_")?.parse().ok()?;
    n.checked_sub(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupScenario {
    pub scenario_id: String,
    pub users: Vec<String>,
    pub items: Vec<String>,
    /// Row-major, one row per user.
    pub ratings: Vec<Vec<u8>>,
    pub seed: u64,
}

impl GroupScenario {
    /// Builds a scenario from raw ratings, generating the canonical labels.
    pub fn from_ratings(scenario_id: impl Into<String>, ratings: Vec<Vec<u8>>, seed: u64) -> Result<Self> {
        let num_users = ratings.len();
        let num_items = ratings.first().map_or(0, Vec::len);
        let scenario = GroupScenario {
            scenario_id: scenario_id.into(),
            users: (0..num_users).map(user_label).collect(),
            items: (0..num_items).map(item_label).collect(),
            ratings,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn rating(&self, user: usize, item: usize) -> u8 {
        self.ratings[user][item]
    }

    /// Ratings of every user for one item.
    pub fn item_column(&self, item: usize) -> impl Iterator<Item = u8> + '_ {
        self.ratings.iter().map(move |row| row[item])
    }

    pub fn item_position(&self, label: &str) -> Option<usize> {
        item_index(label).filter(|&i| i < self.num_items())
    }

    /// Checks the label, shape and range invariants.
    pub fn validate(&self) -> Result<()> {
        if self.users.len() < 2 {
            return Err(Error::Dimension(format!("a group needs at least 2 users, got {}", self.users.len())));
        }
        if self.items.is_empty() {
            return Err(Error::Dimension("a scenario needs at least 1 item".into()));
        }
        for (i, u) in self.users.iter().enumerate() {
            if *u != user_label(i) {
                return Err(Error::Validation(format!("user label {u:?} at position {} should be {}", i + 1, user_label(i))));
            }
        }
        for (i, it) in self.items.iter().enumerate() {
            if *it != item_label(i) {
                return Err(Error::Validation(format!("item label {it:?} at position {} should be {}", i + 1, item_label(i))));
            }
        }
        if self.ratings.len() != self.users.len() {
            return Err(Error::Dimension(format!("{} rating rows for {} users", self.ratings.len(), self.users.len())));
        }
        for (u, row) in self.ratings.iter().enumerate() {
            if row.len() != self.items.len() {
                return Err(Error::Dimension(format!("row {} has {} ratings, expected {}", self.users[u], row.len(), self.items.len())));
            }
            if let Some(i) = row.iter().position(|&r| r > MAX_RATING) {
                return Err(Error::Validation(format!("rating {} at ({}, {}) outside [0, 100]", row[i], self.users[u], self.items[i])));
            }
        }
        Ok(())
    }

    /// Sha-256 over the canonical table text, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(render_table(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Generates one scenario with i.i.d. uniform integer ratings in [0, 100].
pub fn generate_scenario(num_users: usize, num_items: usize, seed: u64) -> Result<GroupScenario> {
    generate_with_id(format!("seed_{seed:016x}"), num_users, num_items, seed)
}

fn generate_with_id(id: String, num_users: usize, num_items: usize, seed: u64) -> Result<GroupScenario> {
    if num_users < 2 {
        return Err(Error::Dimension(format!("num_users must be >= 2, got {num_users}")));
    }
    if num_items < 1 {
        return Err(Error::Dimension("num_items must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratings = (0..num_users).map(|_| (0..num_items).map(|_| rng.gen_range(MIN_RATING..=MAX_RATING)).collect()).collect();
    Ok(GroupScenario {
        scenario_id: id,
        users: (0..num_users).map(user_label).collect(),
        items: (0..num_items).map(item_label).collect(),
        ratings,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSettings {
    pub sizes: Vec<usize>,
    pub per_size: usize,
    pub master_seed: u64,
    #[serde(default = "default_users")]
    pub num_users: usize,
}

fn default_users() -> usize {
    4
}

impl Default for CorpusSettings {
    fn default() -> Self {
        CorpusSettings { sizes: vec![25, 50, 75], per_size: 500, master_seed: 1, num_users: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioCorpus {
    pub scenarios: Vec<GroupScenario>,
    /// Item count → indices into `scenarios`.
    pub size_strata: BTreeMap<usize, Vec<usize>>,
    pub master_seed: u64,
}

impl ScenarioCorpus {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn stratum(&self, size: usize) -> impl Iterator<Item = &GroupScenario> {
        self.size_strata.get(&size).into_iter().flatten().map(|&i| &self.scenarios[i])
    }

    pub fn get(&self, scenario_id: &str) -> Option<&GroupScenario> {
        self.scenarios.iter().find(|s| s.scenario_id == scenario_id)
    }

    fn from_scenarios(scenarios: Vec<GroupScenario>, master_seed: u64) -> Result<Self> {
        let mut size_strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut ids = HashSet::new();
        for (i, s) in scenarios.iter().enumerate() {
            if !ids.insert(s.scenario_id.as_str()) {
                return Err(Error::Validation(format!("duplicate scenario id {}", s.scenario_id)));
            }
            size_strata.entry(s.num_items()).or_default().push(i);
        }
        Ok(ScenarioCorpus { scenarios, size_strata, master_seed })
    }
}

pub fn scenario_id(num_items: usize, index: usize) -> String {
    format!("i{num_items}_{index:04}")
}

/// Generates `per_size` scenarios for every item count in `sizes`.
pub fn generate_corpus(sizes: &[usize], per_size: usize, master_seed: u64) -> Result<ScenarioCorpus> {
    generate_corpus_with(&CorpusSettings { sizes: sizes.to_vec(), per_size, master_seed, num_users: default_users() })
}

pub fn generate_corpus_with(settings: &CorpusSettings) -> Result<ScenarioCorpus> {
    if settings.sizes.is_empty() {
        return Err(Error::Dimension("sizes must be non-empty".into()));
    }
    if settings.per_size < 1 {
        return Err(Error::Dimension("per_size must be >= 1".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = settings.sizes.iter().find(|s| !seen.insert(**s)) {
        return Err(Error::Dimension(format!("item count {dup} listed twice")));
    }
    let jobs: Vec<(usize, usize, usize)> =
        settings.sizes.iter().enumerate().flat_map(|(stratum, &size)| (0..settings.per_size).map(move |i| (stratum, size, i))).collect();
    let scenarios = jobs
        .par_iter()
        .map(|&(stratum, size, i)| {
            let seed = seed::child_seed(settings.master_seed, stratum as u64, i as u64);
            generate_with_id(scenario_id(size, i), settings.num_users, size, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    ScenarioCorpus::from_scenarios(scenarios, settings.master_seed)
}

/// Renders the tab-separated table embedded in prompts.
///
/// ```text
/// user_id\titem_1\titem_2
/// User_1\t0\t100
/// User_2\t50\t50
/// ```
pub fn render_table(scenario: &GroupScenario) -> String {
    let mut out = String::with_capacity(8 + scenario.num_users() * scenario.num_items() * 4);
    out.push_str(USER_ID_HEADER);
    for item in &scenario.items {
        out.push('\t');
        out.push_str(item);
    }
    out.push('\n');
    for (user, row) in scenario.users.iter().zip(&scenario.ratings) {
        out.push_str(user);
        for r in row {
            out.push('\t');
            out.push_str(&r.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses text in the [`render_table`] grammar. The returned scenario has an
/// empty id and seed 0; those are not part of the table.
pub fn parse_table(text: &str) -> Result<GroupScenario> {
    let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("header", "empty table"))?;
    let mut cols = header.split('\t');
    if cols.next().map(str::trim) != Some(USER_ID_HEADER) {
        return Err(Error::parse("header", format!("first column must be {USER_ID_HEADER:?}")));
    }
    let items: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    if items.is_empty() {
        return Err(Error::parse("header", "no item columns"));
    }
    for (i, it) in items.iter().enumerate() {
        if *it != item_label(i) {
            return Err(Error::parse(format!("header column {}", i + 2), format!("expected {}, found {it:?}", item_label(i))));
        }
    }

    let mut users = Vec::new();
    let mut ratings = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        let mut cells = line.split('\t');
        let user = cells.next().unwrap_or_default().trim().to_string();
        if user != user_label(row_idx) {
            return Err(Error::parse(
                format!("row {}", row_idx + 1),
                format!("expected user label {}, found {user:?}", user_label(row_idx)),
            ));
        }
        let cells: Vec<&str> = cells.collect();
        if cells.len() != items.len() {
            return Err(Error::parse(format!("row {user}"), format!("shape error: {} cells, expected {}", cells.len(), items.len())));
        }
        let row = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let at = || format!("({user}, {})", items[i]);
                let v: i64 = c.trim().parse().map_err(|_| Error::parse(at(), format!("non-integer cell {c:?}")))?;
                if !(MIN_RATING as i64..=MAX_RATING as i64).contains(&v) {
                    return Err(Error::parse(at(), format!("rating {v} out of range [0, 100]")));
                }
                Ok(v as u8)
            })
            .collect::<Result<Vec<u8>>>()?;
        users.push(user);
        ratings.push(row);
    }
    let scenario = GroupScenario { scenario_id: String::new(), users, items, ratings, seed: 0 };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario_id: String,
    pub num_items: usize,
    pub seed: u64,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<crate::structure::StructureClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub master_seed: u64,
    pub sizes: Vec<usize>,
    pub per_size: BTreeMap<usize, usize>,
    pub scenarios: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl CorpusManifest {
    pub fn for_corpus(corpus: &ScenarioCorpus) -> Self {
        CorpusManifest {
            master_seed: corpus.master_seed,
            sizes: corpus.size_strata.keys().copied().collect(),
            per_size: corpus.size_strata.iter().map(|(k, v)| (*k, v.len())).collect(),
            scenarios: corpus
                .scenarios
                .iter()
                .map(|s| ManifestEntry {
                    scenario_id: s.scenario_id.clone(),
                    num_items: s.num_items(),
                    seed: s.seed,
                    sha256: s.content_hash(),
                    normalized_distance: None,
                    label: None,
                })
                .collect(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Writes `dir/<size>/<scenario_id>.json` per scenario plus `dir/manifest.json`.
pub fn write_corpus(corpus: &ScenarioCorpus, dir: &Path) -> Result<CorpusManifest> {
    for s in &corpus.scenarios {
        let sub = dir.join(s.num_items().to_string());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let path = sub.join(format!("{}.json", s.scenario_id));
        let text = serde_json::to_string(s)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    let manifest = CorpusManifest::for_corpus(corpus);
    manifest.save(dir)?;
    Ok(manifest)
}

/// Loads a corpus written by [`write_corpus`], verifying content hashes.
pub fn read_corpus(dir: &Path) -> Result<(ScenarioCorpus, CorpusManifest)> {
    let manifest = CorpusManifest::load(dir)?;
    let scenarios = manifest
        .scenarios
        .iter()
        .map(|entry| {
            let path = dir.join(entry.num_items.to_string()).join(format!("{}.json", entry.scenario_id));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let s: GroupScenario = serde_json::from_str(&text)?;
            s.validate()?;
            if s.content_hash() != entry.sha256 {
                return Err(Error::Validation(format!("{} does not match its manifest hash", path.display())));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = ScenarioCorpus::from_scenarios(scenarios, manifest.master_seed)?;
    Ok((corpus, manifest))
}
