//! Artifacts are built in memory and written together with their manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(name: &str, data: &[u8]) -> Self {
        Self {
            name: name.to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a PipelineConfig,
    pub inputs: &'a [FileDigest],
    pub artifacts: Vec<FileDigest>,
}

#[derive(Debug, Default)]
pub struct Artifacts {
    items: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, data: Vec<u8>) {
        debug_assert!(self.items.iter().all(|(n, _)| n != name), "artifact {name} added twice");
        self.items.push((name.to_string(), data));
    }

    /// Serializes `rows` with a header row. An empty table still gets its header.
    pub fn add_csv<T: Serialize + Default>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::output(Path::new(name), e);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut empty = true;
        for row in rows {
            w.serialize(row).map_err(err)?;
            empty = false;
        }
        if empty {
            w.serialize(T::default()).map_err(err)?;
        }
        let mut data = w.into_inner().map_err(|e| CliError::output(Path::new(name), e))?;
        if empty {
            let end = data.iter().position(|b| *b == b'\n').map_or(data.len(), |i| i + 1);
            data.truncate(end);
        }
        self.add(name, data);
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut data = serde_json::to_vec_pretty(value).map_err(|e| CliError::output(Path::new(name), e))?;
        data.push(b'\n');
        self.add(name, data);
        Ok(())
    }

    #[cfg(test)]
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.items.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_slice())
    }

    /// Writes every artifact and then the manifest. On failure every file
    /// written by this call is removed again.
    pub fn commit(self, out_dir: &Path, mut manifest: Manifest<'_>) -> Result<usize, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::output(out_dir, e))?;
        manifest.artifacts = self.items.iter().map(|(n, d)| FileDigest::of(n, d)).collect();
        let mut body = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::output(Path::new(MANIFEST), e))?;
        body.push(b'\n');
        let mut written: Vec<PathBuf> = Vec::new();
        let count = self.items.len();
        let files = self
            .items
            .into_iter()
            .chain(std::iter::once((MANIFEST.to_string(), body)));
        for (name, data) in files {
            let path = out_dir.join(&name);
            if let Err(e) = fs::write(&path, &data) {
                written.push(path.clone());
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(CliError::output(&path, e));
            }
            written.push(path);
        }
        Ok(count)
    }
}
