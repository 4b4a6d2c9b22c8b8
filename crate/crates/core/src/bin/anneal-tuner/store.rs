use std::fs;
use std::path::{Path, PathBuf};

use anneal_tuner::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Instances,
    Readouts,
    Scores,
    Ranks,
    Reports,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Instances => "instances",
            Kind::Readouts => "readouts",
            Kind::Scores => "scores",
            Kind::Ranks => "ranks",
            Kind::Reports => "reports",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub command: String,
    pub seed: u64,
    /// Command-line arguments that reproduce the artifact.
    pub args: Vec<String>,
    pub config_hash: String,
    pub artifact_hash: String,
    pub created: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory with one subdirectory per artifact kind and a manifest.
pub struct ResultStore {
    root: PathBuf,
    command: String,
    seed: u64,
    args: Vec<String>,
    stamp: String,
    written: Vec<PathBuf>,
}

impl ResultStore {
    pub fn open(root: &Path, command: &str, seed: u64, args: Vec<String>) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_string(),
            seed,
            args,
            stamp: chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ").to_string(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, kind: Kind, ext: &str, content: &str) -> Result<PathBuf> {
        let dir = self.root.join(kind.dir());
        fs::create_dir_all(&dir)?;
        let stem = format!("{}-{}-{}", self.command, self.seed, self.stamp);
        let mut path = dir.join(format!("{stem}.{ext}"));
        let mut k = 1;
        while path.exists() {
            path = dir.join(format!("{stem}-{k}.{ext}"));
            k += 1;
        }
        fs::write(&path, content)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Appends every written artifact to `manifest.json`.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let manifest_path = self.root.join("manifest.json");
        let mut manifest: Manifest = match fs::read_to_string(&manifest_path) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Manifest::default(),
            Err(e) => return Err(e.into()),
        };
        let config_hash = sha256_hex(serde_json::to_string(&self.args)?.as_bytes());
        for path in &self.written {
            manifest.artifacts.push(ManifestEntry {
                path: path
                    .strip_prefix(&self.root)
                    .unwrap_or(path)
                    .to_string_lossy()
                    .into_owned(),
                command: self.command.clone(),
                seed: self.seed,
                args: self.args.clone(),
                config_hash: config_hash.clone(),
                artifact_hash: sha256_hex(&fs::read(path)?),
                created: self.stamp.clone(),
            });
        }
        fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(self.written)
    }
}
