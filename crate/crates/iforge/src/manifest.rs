//! Run manifests: the fully resolved settings of one command invocation.
//!
//! The manifest hash covers the command, its configuration and the tool
//! version, never timestamps or output paths, so re-running a manifest lands
//! in the same output directory and rewrites the same bytes.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{BenchmarkRun, PredictRun, SimulateRun};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex digits of the SHA-256 digest kept in the hash.
const HASH_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "snake_case")]
pub enum RunConfig {
    Simulate(SimulateRun),
    Benchmark(BenchmarkRun),
    Predict(PredictRun),
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Simulate(c) => c.seed,
            RunConfig::Benchmark(c) => c.bench.seed,
            RunConfig::Predict(c) => c.seed,
        }
    }

    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Keyed<'a> {
            tool_version: &'a str,
            #[serde(flatten)]
            run: &'a RunConfig,
        }
        let bytes = serde_json::to_vec(&Keyed { tool_version: TOOL_VERSION, run: self })
            .expect("run configurations serialize infallibly");
        let mut digest = hex::encode(Sha256::digest(&bytes));
        digest.truncate(HASH_LEN);
        digest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub hash: String,
    #[serde(flatten)]
    pub run: RunConfig,
    pub seed: u64,
    pub tool_version: String,
    /// Unix seconds.
    pub started: f64,
    pub finished: f64,
    /// Artifact file names inside the run directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let manifest: Self =
            serde_json::from_str(&text).with_context(|| format!("{} is not a run manifest", path.display()))?;
        if manifest.hash != manifest.run.hash() {
            log::warn!(
                "{}: recorded hash {} differs from the recomputed {} (edited file or other tool version)",
                path.display(),
                manifest.hash,
                manifest.run.hash()
            );
        }
        Ok(manifest)
    }
}

/// An output directory for one run, `<base>/<hash>`.
#[derive(Debug)]
pub struct RunDir {
    pub run: RunConfig,
    pub hash: String,
    pub dir: PathBuf,
    started: f64,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(base: &Path, run: RunConfig) -> anyhow::Result<Self> {
        let hash = run.hash();
        let dir = base.join(&hash);
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { run, hash, dir, started: unix_now(), outputs: Vec::new() })
    }

    /// Path of artifact `name`, recorded in the manifest.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.dir.join(name)
    }

    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            hash: self.hash,
            seed: self.run.seed(),
            run: self.run,
            tool_version: TOOL_VERSION.to_owned(),
            started: self.started,
            finished: unix_now(),
            outputs: self.outputs,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// SHA-256 of a file, hex encoded.
pub fn file_digest(path: &Path) -> std::io::Result<String> {
    use std::io::Read as _;
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        match file.read(&mut buf)? {
            0 => break,
            k => hasher.update(&buf[..k]),
        }
    }
    Ok(hex::encode(hasher.finalize()))
}
