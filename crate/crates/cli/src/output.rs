//! Output directory bookkeeping: every file written in a run is tracked so a
//! failed run can remove what it produced, and hashed for the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct OutputDir {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
    hashes: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<OutputDir> {
        let created = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            created,
            written: Vec::new(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.track(name, bytes, path.clone());
        Ok(path)
    }

    /// Records a file another component wrote into this directory.
    pub fn adopt(&mut self, path: PathBuf) -> std::io::Result<()> {
        let bytes = fs::read(&path)?;
        let name = path
            .strip_prefix(&self.dir)
            .unwrap_or(&path)
            .to_string_lossy()
            .into_owned();
        self.track(&name, &bytes, path);
        Ok(())
    }

    fn track(&mut self, name: &str, bytes: &[u8], path: PathBuf) {
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        self.written.push(path);
    }

    /// SHA-256 of every file written so far, by name.
    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.hashes
    }

    /// Removes everything this run wrote, and the directory if the run made it.
    pub fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
