//! Content-addressed on-disk cache of final-time solutions.
//!
//! Entries are keyed by the SHA-256 of a canonical description of the solve.
//! Writes go through a temporary file and a rename, so concurrent writers of
//! the same key leave one complete entry behind (last writer wins).
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct SolutionCache {
    dir: Option<PathBuf>,
}

impl SolutionCache {
    pub fn disabled() -> Self {
        SolutionCache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        SolutionCache { dir: Some(dir.into()) }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, key: &str) -> Option<PathBuf> {
        let digest = Sha256::digest(key.as_bytes());
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.txt", hex::encode(digest))))
    }

    pub fn load(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(path) = self.path_for(key) else {
            return Ok(None);
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        if lines.next() != Some(key) {
            // hash collision or stale format
            return Ok(None);
        }
        let values = lines
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Config(format!("corrupt cache entry {}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(values))
    }

    pub fn store(&self, key: &str, values: &[f64]) -> Result<()> {
        let Some(path) = self.path_for(key) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache entries live in a directory");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.{}.tmp",
            path.file_name().unwrap().to_string_lossy(),
            std::process::id()
        ));
        {
            let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
            writeln!(f, "{key}")?;
            for v in values {
                writeln!(f, "{v:?}")?;
            }
            f.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn get_or_compute<F>(&self, key: &str, compute: F) -> Result<Vec<f64>>
    where
        F: FnOnce() -> Result<Vec<f64>>,
    {
        if let Some(v) = self.load(key)? {
            log::debug!("cache hit for {key}");
            return Ok(v);
        }
        let v = compute()?;
        self.store(key, &v)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SolutionCache::at(dir.path());
        let values = vec![0.1 + 0.2, -1e-300, 1.234_567_890_123_456_7, 0.0];
        cache.store("k1", &values).unwrap();
        assert_eq!(cache.load("k1").unwrap().unwrap(), values);
        assert_eq!(cache.load("other").unwrap(), None);
    }

    #[test]
    fn computes_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SolutionCache::at(dir.path());
        let a = cache.get_or_compute("key", || Ok(vec![1.0, 2.0])).unwrap();
        let b = cache
            .get_or_compute("key", || panic!("should have been cached"))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disabled_cache_always_computes() {
        let cache = SolutionCache::disabled();
        assert_eq!(cache.load("x").unwrap(), None);
        cache.store("x", &[1.0]).unwrap();
        assert_eq!(cache.load("x").unwrap(), None);
    }
}
