//! Append-only corpus file plus an in-memory copy of its records. Lines
//! that cannot be read on open are moved to a `.rejected` file next to it.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use narrative_core::corpus::{parse_narrative_line, serialize_narrative};
use narrative_core::LocalizedNarrative;

pub struct Store {
    path: PathBuf,
    appender: Mutex<File>,
    records: RwLock<Vec<(LocalizedNarrative, String)>>,
    keep_failed: bool,
}

/// What [`Store::open`] found in an existing file.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: usize,
    pub unreadable: usize,
    pub purged: usize,
}

impl Store {
    /// Opens (or creates) the store and reloads every readable record.
    /// Without `keep_failed`, narratives that failed QC are purged from the
    /// file and later ones are never written.
    pub fn open(path: impl AsRef<Path>, keep_failed: bool) -> std::io::Result<(Self, LoadReport)> {
        let path = path.as_ref().to_path_buf();
        let mut report = LoadReport::default();
        let mut records = Vec::new();
        let mut rejected = Vec::new();
        if path.exists() {
            for (k, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                match parse_narrative_line::<f64>(line, k + 1) {
                    Ok(n) if !keep_failed && !passed(&n) => report.purged += 1,
                    Ok(n) => records.push((n, line.to_string())),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        rejected.push(line.to_string());
                    }
                }
            }
        }
        report.loaded = records.len();
        report.unreadable = rejected.len();
        if !rejected.is_empty() {
            let mut f = OpenOptions::new().create(true).append(true).open(path.with_extension("rejected"))?;
            for l in &rejected {
                writeln!(f, "{l}")?;
            }
        }
        if report.purged > 0 || report.unreadable > 0 {
            rewrite(&path, records.iter().map(|(_, l)| l.as_str()))?;
        }
        let appender = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((
            Self { path, appender: Mutex::new(appender), records: RwLock::new(records), keep_failed },
            report,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one narrative durably. Returns whether it was stored (failed
    /// narratives are dropped when the store discards them).
    pub fn append(&self, n: &LocalizedNarrative) -> std::io::Result<bool> {
        if !self.keep_failed && !passed(n) {
            return Ok(false);
        }
        let line = serialize_narrative(n).map_err(std::io::Error::other)?;
        let mut file = self.appender.lock().expect("store appender poisoned");
        file.write_all(format!("{line}\n").as_bytes())?;
        file.sync_data()?;
        self.records.write().expect("store index poisoned").push((n.clone(), line));
        Ok(true)
    }

    /// Stored lines matching the filters, in insertion order.
    pub fn list(&self, image_id: Option<&str>, pass: Option<bool>) -> Vec<String> {
        self.records
            .read()
            .expect("store index poisoned")
            .iter()
            .filter(|(n, _)| image_id.is_none_or(|id| n.image_id == id))
            .filter(|(n, _)| pass.is_none_or(|p| passed(n) == p))
            .map(|(_, l)| l.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store index poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn passed(n: &LocalizedNarrative) -> bool {
    n.qc.as_ref().is_some_and(|q| q.pass)
}

fn rewrite<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        for l in lines {
            writeln!(f, "{l}")?;
        }
        f.sync_all()?;
    }
    std::fs::rename(tmp, path)
}
