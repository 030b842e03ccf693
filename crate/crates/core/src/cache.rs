//! Persistent L-value cache: a JSON-lines file with a header line, one
//! [`LValueResult`] per following line.
//!
//! On load every entry is checked for internal consistency (level, valuation)
//! and a deterministic sample is recomputed from scratch. Any disagreement is
//! reported as [`Error::CachePoisoned`] rather than silently used.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::characters::CharSpec;
use crate::error::{Error, Result};
use crate::lvalues::{compute_uncached, LValueResult, SizeGuard};
use crate::SCHEMA_VERSION;

const KIND: &str = "dyadic-lvalue-cache";

/// Number of entries recomputed when a cache file is opened.
pub const AUDIT_SAMPLE: usize = 4;

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
struct Header {
    schema_version: u32,
    kind: String,
}

/// `(n, d, power, m)` of a canonical character spec.
pub type CacheKey = (u32, u64, u8, u32);

fn key_of(spec: &CharSpec, m: u32) -> CacheKey {
    let s = spec.canonical();
    (s.layer(), s.twist(), s.twist_power(), m)
}

#[derive(Debug, Default)]
pub struct LValueCache {
    entries: RwLock<BTreeMap<CacheKey, LValueResult>>,
    writer: Mutex<Option<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl LValueCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a cache file, validating and auditing existing entries.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        let exists = path.exists() && std::fs::metadata(&path)?.len() > 0;
        if exists {
            let reader = BufReader::new(File::open(&path)?);
            let mut lines = reader.lines();
            let header_line = lines
                .next()
                .ok_or_else(|| Error::Cache("empty cache file".into()))??;
            let header: Header = serde_json::from_str(&header_line)
                .map_err(|e| Error::Cache(format!("bad header: {e}")))?;
            if header.kind != KIND || header.schema_version != SCHEMA_VERSION {
                return Err(Error::Cache(format!(
                    "unsupported cache header {header_line}"
                )));
            }
            for (i, line) in lines.enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LValueResult = serde_json::from_str(&line)
                    .map_err(|e| Error::Cache(format!("line {}: {e}", i + 2)))?;
                check_entry(&entry)?;
                let key = key_of(&entry.spec, entry.m);
                match entries.get(&key) {
                    Some(prev) if prev != &entry => {
                        return Err(Error::CachePoisoned(format!(
                            "conflicting entries for {} at m = {}",
                            entry.spec, entry.m
                        )))
                    }
                    _ => {
                        entries.insert(key, entry);
                    }
                }
            }
            audit(&entries)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let mut writer = BufWriter::new(file);
        if !exists {
            let header = Header {
                schema_version: SCHEMA_VERSION,
                kind: KIND.into(),
            };
            writeln!(writer, "{}", serde_json::to_string(&header)?)?;
            writer.flush()?;
        }
        Ok(Self {
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(writer)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, spec: &CharSpec, m: u32) -> Option<LValueResult> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&key_of(spec, m))
            .cloned()
    }

    /// Inserts a result. Re-inserting an identical value is a no-op; a
    /// different value under the same key is an error.
    pub fn insert(&self, result: LValueResult) -> Result<()> {
        check_entry(&result)?;
        let key = key_of(&result.spec, result.m);
        let mut entries = self.entries.write().expect("cache lock");
        if let Some(prev) = entries.get(&key) {
            if prev == &result {
                return Ok(());
            }
            return Err(Error::Inconsistent(format!(
                "cache already holds a different value for {} at m = {}",
                result.spec, result.m
            )));
        }
        let mut writer = self.writer.lock().expect("cache writer lock");
        if let Some(w) = writer.as_mut() {
            writeln!(w, "{}", serde_json::to_string(&result)?)?;
            w.flush()?;
        }
        entries.insert(key, result);
        Ok(())
    }
}

fn check_entry(entry: &LValueResult) -> Result<()> {
    if entry.value.level() != entry.spec.layer() {
        return Err(Error::CachePoisoned(format!(
            "entry for {} stored at level {}",
            entry.spec,
            entry.value.level()
        )));
    }
    if entry.value.ord2() != entry.ord2 {
        return Err(Error::CachePoisoned(format!(
            "stored ord2 {} of L({}, {}) does not match its value",
            entry.ord2,
            entry.spec,
            1 - entry.m as i64
        )));
    }
    Ok(())
}

/// Recomputes the smallest few entries that fit the default size guard.
fn audit(entries: &BTreeMap<CacheKey, LValueResult>) -> Result<()> {
    let guard = SizeGuard::default();
    for entry in entries
        .values()
        .filter(|e| {
            guard
                .check(e.spec.layer(), e.spec.effective_twist())
                .is_ok()
        })
        .take(AUDIT_SAMPLE)
    {
        let fresh = compute_uncached(&entry.spec.canonical(), entry.m)?;
        if fresh.value != entry.value {
            return Err(Error::CachePoisoned(format!(
                "recomputed L({}, {}) differs from the cached value",
                entry.spec,
                1 - entry.m as i64
            )));
        }
    }
    Ok(())
}
