use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Collects files written under one output directory.
#[derive(Debug)]
pub(crate) struct ArtifactWriter {
    root: PathBuf,
    written: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, data: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, data)?;
        self.written.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    pub fn finish(self) -> Vec<Artifact> {
        self.written
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Checks that every artifact exists under `root` with the recorded digest.
pub fn verify_artifacts(root: &Path, artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        let data = fs::read(root.join(&a.path))?;
        if data.len() as u64 != a.bytes || sha256_hex(&data) != a.sha256 {
            return Err(Error::Malformed(format!("{} does not match the manifest", a.path)));
        }
    }
    Ok(())
}

/// CSV into memory; rows are written with `Display` so floats round-trip.
pub(crate) struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self { w })
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) -> Result<()> {
        self.w.write_record(fields.iter().map(|f| f.to_string()))?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write("a/b.csv", b"x,y\n1,2\n").unwrap();
        let list = w.finish();
        verify_artifacts(dir.path(), &list).unwrap();
        fs::write(dir.path().join("a/b.csv"), b"x,y\n1,3\n").unwrap();
        assert!(verify_artifacts(dir.path(), &list).is_err());
    }
}
