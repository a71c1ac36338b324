//! Append-only store of raw model outputs keyed by (model, scenario).

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub scenario_id: String,
    pub model: String,
    pub raw_text: String,
}

/// One JSON-lines file per model under a directory.
#[derive(Debug)]
pub struct ReplayStore {
    dir: PathBuf,
    entries: HashMap<(String, String), String>,
}

pub(crate) fn file_stem(model: &str) -> String {
    model.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_') { c } else { '_' }).collect()
}

impl ReplayStore {
    /// Opens (and creates) the store, loading every entry. Later lines win;
    /// a truncated trailing line from an interrupted write is skipped.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut entries = HashMap::new();
        let listing = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut files: Vec<PathBuf> =
            listing.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "jsonl")).collect();
        files.sort();
        for path in files {
            let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            for line in BufReader::new(f).lines() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<ReplayEntry>(&line) {
                    Ok(e) => {
                        entries.insert((e.model, e.scenario_id), e.raw_text);
                    }
                    Err(err) => log::warn!("skipping unreadable replay line in {}: {err}", path.display()),
                }
            }
        }
        Ok(ReplayStore { dir, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, model: &str, scenario_id: &str) -> Option<&str> {
        self.entries.get(&(model.to_string(), scenario_id.to_string())).map(String::as_str)
    }

    pub fn contains(&self, model: &str, scenario_id: &str) -> bool {
        self.get(model, scenario_id).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entry: ReplayEntry) -> Result<()> {
        let path = self.dir.join(format!("{}.jsonl", file_stem(&entry.model)));
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(&entry)? + "\n";
        f.write_all(line.as_bytes()).map_err(|e| Error::io(&path, e))?;
        self.entries.insert((entry.model, entry.scenario_id), entry.raw_text);
        Ok(())
    }
}
