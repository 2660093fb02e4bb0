use std::path::{Path, PathBuf};

use anyhow::Context as _;
use iforge_core::dgp::Dgp;
use iforge_core::intervals::Method;
use iforge_core::study::{run_study, StudyConfig, StudyResult};
use serde::{Deserialize, Serialize};

use super::{executor, usage, CommandResult};
use crate::io::{create_csv, fmt_f64, fmt_opt, level_label};
use crate::manifest::{RunConfig, RunDir};

pub const TABLE_FILE: &str = "table1.csv";
pub const REPLICATIONS_FILE: &str = "replications.csv";

/// A coverage study over the grid `methods × t × p`. Methods without a `T`
/// or `p` contribute one row per value of the other axis only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRun {
    pub dgp: Dgp,
    pub methods: Vec<Method>,
    pub t: Vec<usize>,
    pub p: Vec<f64>,
    pub alphas: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub replications: usize,
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub scale_target: bool,
    pub seed: u64,
}

impl SimulateRun {
    /// Published settings for `dgp`, to be overridden field by field.
    pub fn standard(dgp: Dgp, methods: Vec<Method>, t: Vec<usize>, p: Vec<f64>, seed: u64) -> Self {
        let base = StudyConfig::standard(dgp, Method::ExtraNn, 0, 1.0, seed);
        Self {
            dgp,
            methods,
            t,
            p,
            alphas: base.alphas,
            n_train: base.n_train,
            n_test: base.n_test,
            replications: 20,
            hidden_widths: base.hidden_widths,
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
            scale_target: base.scale_target,
            seed,
        }
    }

    /// One study configuration per table row. Every cell shares the master
    /// seed, so all methods see the same simulated samples.
    pub fn cells(&self) -> Vec<StudyConfig> {
        let mut cells = Vec::new();
        for &method in &self.methods {
            let ts: Vec<Option<usize>> =
                if method.uses_t() { self.t.iter().copied().map(Some).collect() } else { vec![None] };
            let ps: Vec<Option<f64>> =
                if method.uses_p() { self.p.iter().copied().map(Some).collect() } else { vec![None] };
            for &t in &ts {
                for &p in &ps {
                    cells.push(StudyConfig {
                        dgp: self.dgp,
                        method,
                        t: t.unwrap_or(0),
                        p: p.unwrap_or(1.0),
                        n_train: self.n_train,
                        n_test: self.n_test,
                        alphas: self.alphas.clone(),
                        hidden_widths: self.hidden_widths.clone(),
                        epochs: self.epochs,
                        batch_size: self.batch_size,
                        learning_rate: self.learning_rate,
                        scale_target: self.scale_target,
                        seed: self.seed,
                    });
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> CommandResult<()> {
        if self.methods.is_empty() {
            return Err(usage("--method needs at least one method"));
        }
        if self.methods.iter().any(|m| m.uses_t()) && self.t.is_empty() {
            return Err(usage("--T needs at least one value"));
        }
        if self.methods.iter().any(|m| m.uses_p()) && self.p.is_empty() {
            return Err(usage("--p needs at least one value"));
        }
        if self.replications == 0 {
            return Err(usage("--replications must be at least 1"));
        }
        for cell in self.cells() {
            cell.validate().map_err(|e| usage(e.to_string()))?;
        }
        Ok(())
    }
}

/// One averaged row of the Table-1-shaped output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub t: Option<usize>,
    pub p: Option<f64>,
    pub mape: f64,
    pub mspe: f64,
    pub miss_rates: Vec<f64>,
}

impl TableRow {
    fn from_study(study: &StudyResult) -> Self {
        let c = &study.config;
        Self {
            method: c.method,
            t: c.method.uses_t().then_some(c.t),
            p: c.method.uses_p().then_some(c.p),
            mape: study.summary.mape,
            mspe: study.summary.mspe,
            miss_rates: study.summary.miss_rates.clone(),
        }
    }
}

pub fn run_simulate(run: SimulateRun, out: &Path) -> CommandResult<PathBuf> {
    run.validate()?;
    let exec = executor()?;
    let mut studies = Vec::new();
    for cell in run.cells() {
        let study = run_study(&exec, &cell, run.replications)
            .with_context(|| format!("{} T={} p={} failed", cell.method, cell.t, cell.p))?;
        studies.push(study);
    }
    let rows: Vec<TableRow> = studies.iter().map(TableRow::from_study).collect();

    let levels: Vec<String> = run.alphas.iter().map(|&a| level_label(a)).collect();
    let mut dir = RunDir::create(out, RunConfig::Simulate(run.clone()))?;
    let hash = dir.hash.clone();

    let mut table = create_csv(&dir.artifact(TABLE_FILE), &hash)?;
    let mut header: Vec<String> = ["method", "T", "p", "MAPE", "MSPE"].map(String::from).to_vec();
    header.extend(levels.iter().map(|l| format!("Cov{l}")));
    table.write_record(&header)?;
    for row in &rows {
        let mut record = vec![row.method.to_string(), row.t.map(|t| t.to_string()).unwrap_or_default(), fmt_opt(row.p)];
        record.extend([row.mape, row.mspe].into_iter().chain(row.miss_rates.iter().copied()).map(fmt_f64));
        table.write_record(&record)?;
    }
    table.flush()?;

    let mut reps = create_csv(&dir.artifact(REPLICATIONS_FILE), &hash)?;
    let mut header: Vec<String> = ["method", "T", "p", "replication", "MAPE", "MSPE"].map(String::from).to_vec();
    header.extend(levels.iter().map(|l| format!("Cov{l}")));
    header.extend(["bias2", "variance", "covariance", "aleatoric_var", "ridge"].map(String::from));
    reps.write_record(&header)?;
    for (study, row) in studies.iter().zip(&rows) {
        for rep in &study.replications {
            let d = rep.decomposition.as_ref();
            let mut record = vec![
                row.method.to_string(),
                row.t.map(|t| t.to_string()).unwrap_or_default(),
                fmt_opt(row.p),
                rep.index.to_string(),
            ];
            record.extend(
                [rep.report.mape, rep.report.mspe]
                    .into_iter()
                    .chain(rep.report.miss_rates.iter().copied())
                    .map(fmt_f64),
            );
            record.extend([
                fmt_opt(d.map(|d| d.bias_squared())),
                fmt_opt(d.map(|d| d.variance_term())),
                fmt_opt(d.map(|d| d.covariance_term())),
                fmt_f64(rep.aleatoric_var),
                fmt_opt(rep.ridge),
            ]);
            reps.write_record(&record)?;
        }
    }
    reps.flush()?;

    print_table(&run, &levels, &rows);
    let manifest = dir.finish()?;
    println!("wrote {}", manifest.parent().unwrap_or(out).display());
    Ok(manifest.parent().unwrap_or(out).to_owned())
}

fn print_table(run: &SimulateRun, levels: &[String], rows: &[TableRow]) {
    println!(
        "{:?} process, {} replications of {} train / {} test rows",
        run.dgp, run.replications, run.n_train, run.n_test
    );
    let mut header = format!("{:<18}{:>5}{:>8}{:>10}{:>10}", "method", "T", "p", "MAPE", "MSPE");
    for l in levels {
        header.push_str(&format!("{:>9}", format!("Cov{l}")));
    }
    println!("{header}");
    for row in rows {
        let mut line = format!(
            "{:<18}{:>5}{:>8}{:>10.4}{:>10.4}",
            row.method.to_string(),
            row.t.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            row.p.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
            row.mape,
            row.mspe
        );
        for m in &row.miss_rates {
            line.push_str(&format!("{m:>9.4}"));
        }
        println!("{line}");
    }
}
