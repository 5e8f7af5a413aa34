//! Output-directory bookkeeping: every file a run writes is tracked so a
//! failing run can remove its partial outputs and leave the directory
//! trustworthy.

use std::fs;
use std::path::{Path, PathBuf};

use emojistats::Result;
use serde::Serialize;

pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_string(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        self.write_bytes(name, contents.as_bytes())
    }

    /// Pretty JSON with a trailing newline; serde's struct field order makes
    /// the bytes deterministic.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut json = serde_json::to_string_pretty(value)?;
        json.push('\n');
        self.write_string(name, &json)
    }

    /// Removes everything this run wrote. Called on command failure.
    pub fn cleanup_partial(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }
}
