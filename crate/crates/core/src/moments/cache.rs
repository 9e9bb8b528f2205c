//! On-disk cache of power sum tables.
//!
//! One JSON file per (p, convention, method). Values are decimal strings and
//! the file carries a SHA-256 over its contents, so a damaged file is
//! recognised and discarded rather than trusted. Writes go to a temporary
//! file in the same directory and are renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Convention, PowerSumTable, SumMethod};
use crate::ffprime::Prime;

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cached exact and float values disagree for p = {p}, n = {n}")]
    Conflict { p: u64, n: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    n: u32,
    value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    p: u64,
    convention: Convention,
    method: SumMethod,
    entries: Vec<Entry>,
    checksum: String,
}

fn checksum(p: u64, convention: Convention, method: SumMethod, entries: &[Entry]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{CACHE_SCHEMA_VERSION}|{p}|{convention}|{method}"));
    for e in entries {
        h.update(format!("|{}={}", e.n, e.value));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct PowerSumCache {
    dir: PathBuf,
}

impl PowerSumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PowerSumCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, p: Prime, convention: Convention, method: SumMethod) -> PathBuf {
        self.dir
            .join(format!("sums-p{}-{}-{}.json", p.get(), convention, method))
    }

    pub fn store(&self, table: &PowerSumTable) -> Result<(), CacheError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CacheError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let entries: Vec<Entry> = table
            .values
            .iter()
            .map(|(&n, v)| Entry {
                n,
                value: v.to_string(),
            })
            .collect();
        let file = CacheFile {
            schema_version: CACHE_SCHEMA_VERSION,
            p: table.p.get(),
            convention: table.convention,
            method: table.method,
            checksum: checksum(table.p.get(), table.convention, table.method, &entries),
            entries,
        };
        let target = self.path(table.p, table.convention, table.method);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io(&self.dir))?;
        let body = serde_json::to_vec_pretty(&file).expect("cache file serializes");
        tmp.write_all(&body).map_err(io(tmp.path()))?;
        tmp.persist(&target).map_err(|e| CacheError::Io {
            path: target.clone(),
            source: e.error,
        })?;
        Ok(())
    }

    /// The stored table, or `None` if absent or unreadable. A damaged file is
    /// logged and ignored.
    pub fn load(&self, p: Prime, convention: Convention, method: SumMethod) -> Option<PowerSumTable> {
        let path = self.path(p, convention, method);
        let bytes = fs::read(&path).ok()?;
        match parse(&bytes, p, convention, method) {
            Some(t) => Some(t),
            None => {
                log::warn!("discarding corrupt cache entry {}", path.display());
                None
            }
        }
    }

    /// Load the record for `method`, after confirming that every exact and
    /// float record on disk for this prime agrees where both are present.
    pub fn load_checked(&self, p: Prime, method: SumMethod) -> Result<Option<PowerSumTable>, CacheError> {
        let mut found: Vec<PowerSumTable> = Vec::new();
        for m in [SumMethod::ExactCyclotomic, SumMethod::FloatCongruence] {
            for c in [Convention::Restricted, Convention::Completed] {
                if let Some(t) = self.load(p, c, m) {
                    found.push(t);
                }
            }
        }
        let normalized: Vec<PowerSumTable> = found.iter().map(|t| t.to_completed()).collect();
        for (i, a) in normalized.iter().enumerate() {
            for b in &normalized[i + 1..] {
                for (n, v) in &a.values {
                    if let Some(w) = b.values.get(n) {
                        if v != w {
                            return Err(CacheError::Conflict { p: p.get(), n: *n });
                        }
                    }
                }
            }
        }
        Ok(found
            .into_iter()
            .filter(|t| t.method == method)
            .max_by_key(|t| t.nmax()))
    }
}

fn parse(bytes: &[u8], p: Prime, convention: Convention, method: SumMethod) -> Option<PowerSumTable> {
    let file: CacheFile = serde_json::from_slice(bytes).ok()?;
    if file.schema_version != CACHE_SCHEMA_VERSION
        || file.p != p.get()
        || file.convention != convention
        || file.method != method
        || file.checksum != checksum(file.p, file.convention, file.method, &file.entries)
    {
        return None;
    }
    let mut values = BTreeMap::new();
    for e in &file.entries {
        values.insert(e.n, e.value.parse::<BigInt>().ok()?);
    }
    Some(PowerSumTable {
        p,
        convention,
        method,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{power_sums_exact, power_sums_float};

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PowerSumCache::new(dir.path());
        let t = power_sums_exact(p(7), 6, Convention::Completed).unwrap();
        cache.store(&t).unwrap();
        assert_eq!(cache.load(p(7), Convention::Completed, SumMethod::ExactCyclotomic), Some(t.clone()));
        assert_eq!(cache.load(p(7), Convention::Restricted, SumMethod::ExactCyclotomic), None);
        assert_eq!(
            cache.load_checked(p(7), SumMethod::ExactCyclotomic).unwrap(),
            Some(t)
        );
    }

    #[test]
    fn corrupt_files_are_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PowerSumCache::new(dir.path());
        let t = power_sums_exact(p(5), 4, Convention::Restricted).unwrap();
        cache.store(&t).unwrap();
        let path = cache.path(p(5), Convention::Restricted, SumMethod::ExactCyclotomic);
        let text = fs::read_to_string(&path).unwrap();
        // tamper with a value but leave the checksum alone
        let tampered = text.replacen("\"value\": \"1\"", "\"value\": \"2\"", 1);
        assert_ne!(tampered, text);
        fs::write(&path, tampered).unwrap();
        assert_eq!(cache.load(p(5), Convention::Restricted, SumMethod::ExactCyclotomic), None);
        fs::write(&path, b"{not json").unwrap();
        assert_eq!(cache.load(p(5), Convention::Restricted, SumMethod::ExactCyclotomic), None);
    }

    #[test]
    fn exact_float_conflict_fails_loudly() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PowerSumCache::new(dir.path());
        let exact = power_sums_exact(p(11), 4, Convention::Completed).unwrap();
        let mut float = power_sums_float(p(11), 4, 64).unwrap();
        assert_eq!(exact.values, float.values);
        cache.store(&exact).unwrap();
        cache.store(&float).unwrap();
        assert!(cache.load_checked(p(11), SumMethod::FloatCongruence).unwrap().is_some());
        *float.values.get_mut(&3).unwrap() += 121;
        cache.store(&float).unwrap();
        assert!(matches!(
            cache.load_checked(p(11), SumMethod::ExactCyclotomic),
            Err(CacheError::Conflict { p: 11, n: 3 })
        ));
    }
}
