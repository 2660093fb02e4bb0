use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use iforge_core::bench::{run_benchmark, BenchMethod, BenchmarkConfig};
use serde::{Deserialize, Serialize};

use super::{executor, usage, write_json, CommandResult};
use crate::io::{create_csv, fmt_f64, known_dataset, load_csv};
use crate::manifest::{file_digest, RunConfig, RunDir};

pub const RESULT_FILE: &str = "benchmark.json";
pub const SPLITS_FILE: &str = "splits.csv";

/// Datasets above this many rows need `--allow-huge`.
pub const HUGE_ROWS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub data: PathBuf,
    /// SHA-256 of the data file, so a changed file changes the run hash.
    pub data_sha256: String,
    pub dataset: String,
    /// `None` selects the last column.
    pub target: Option<String>,
    pub bench: BenchmarkConfig,
    pub allow_huge: bool,
}

/// Default `(splits, hidden width)` for a dataset file: five splits and 100
/// units for protein, one split and 100 units for Year MSD, 20 and 50 for
/// everything else.
pub fn tier_defaults(path: &Path) -> (usize, usize) {
    match known_dataset(path).map(|k| k.0) {
        Some("protein") => (5, 100),
        Some("year" | "msd") => (1, 100),
        _ => (20, 50),
    }
}

pub fn is_huge_name(path: &Path) -> bool {
    matches!(known_dataset(path).map(|k| k.0), Some("year" | "msd"))
}

impl BenchmarkRun {
    pub fn new(data: PathBuf, target: Option<String>, bench: BenchmarkConfig, allow_huge: bool) -> CommandResult<Self> {
        if !data.is_file() {
            return Err(usage(format!("data file {} does not exist", data.display())));
        }
        bench.validate().map_err(|e| usage(e.to_string()))?;
        let data_sha256 = file_digest(&data).with_context(|| format!("cannot read {}", data.display()))?;
        let dataset = data.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_owned();
        Ok(Self { data, data_sha256, dataset, target, bench, allow_huge })
    }
}

/// The JSON result record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub manifest: String,
    pub dataset: String,
    pub method: BenchMethod,
    #[serde(rename = "T")]
    pub t: usize,
    pub mean_rmspe: f64,
    /// `null` with a single split.
    pub se: Option<f64>,
    pub per_split: Vec<f64>,
    /// Wall-clock seconds; the only field that differs between identical runs.
    pub runtime_s: f64,
}

fn refuse_huge() -> super::CommandError {
    usage("refusing to run on a Year-MSD-scale dataset without --allow-huge")
}

pub fn run_benchmark_command(run: BenchmarkRun, out: &Path) -> CommandResult<PathBuf> {
    if !run.data.is_file() {
        return Err(usage(format!("data file {} does not exist", run.data.display())));
    }
    if !run.allow_huge && is_huge_name(&run.data) {
        return Err(refuse_huge());
    }
    run.bench.validate().map_err(|e| usage(e.to_string()))?;
    let digest = file_digest(&run.data).with_context(|| format!("cannot read {}", run.data.display()))?;
    if digest != run.data_sha256 {
        log::warn!("{} changed since the manifest was written", run.data.display());
    }
    let labelled = load_csv(&run.data, run.target.as_deref())?;
    if !run.allow_huge && labelled.data.len() > HUGE_ROWS {
        return Err(refuse_huge());
    }

    let exec = executor()?;
    let started = Instant::now();
    let result = run_benchmark(&exec, &labelled.data, &run.bench)
        .with_context(|| format!("benchmark on {} failed", run.data.display()))?;
    let runtime_s = started.elapsed().as_secs_f64();

    let mut dir = RunDir::create(out, RunConfig::Benchmark(run.clone()))?;
    let record = BenchmarkRecord {
        manifest: dir.hash.clone(),
        dataset: run.dataset.clone(),
        method: run.bench.method,
        t: run.bench.t,
        mean_rmspe: result.mean_rmspe,
        se: result.se,
        per_split: result.per_split.clone(),
        runtime_s,
    };
    write_json(&dir.artifact(RESULT_FILE), &record)?;
    let hash = dir.hash.clone();
    let mut splits = create_csv(&dir.artifact(SPLITS_FILE), &hash)?;
    splits.write_record(["split", "rmspe"])?;
    for (s, v) in result.per_split.iter().enumerate() {
        splits.write_record([s.to_string(), fmt_f64(*v)])?;
    }
    splits.flush()?;

    let se = result.se.map_or_else(|| "NA".to_owned(), |s| format!("{s:.4}"));
    println!(
        "{} {} T={}: RMSPE {:.4} ± {se} over {} splits ({runtime_s:.1} s)",
        run.dataset,
        run.bench.method,
        run.bench.t,
        result.mean_rmspe,
        result.per_split.len()
    );
    let manifest = dir.finish()?;
    let dir = manifest.parent().unwrap_or(out).to_owned();
    println!("wrote {}", dir.display());
    Ok(dir)
}
