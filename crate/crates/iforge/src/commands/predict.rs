use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use iforge_core::dgp::Standardizer;
use iforge_core::intervals::{
    aleatoric_variance, boot_bias_corrected_interval, boot_mean_interval, boot_normal_interval,
    boot_percentile_interval, bootstrap_fit, extra_nn_fit, extra_nn_interval, fit_single, mc_dropout_fit,
    mc_dropout_interval, mc_dropout_predict_all, DeltaMethod, Ensemble, Method, PredictionInterval,
};
use iforge_core::nn::{predict_all, NetworkSpec, Parameters, TrainConfig};
use iforge_core::rng::{derive, Stream};
use iforge_core::{Dataset, Executor};
use serde::{Deserialize, Serialize};

use super::{executor, usage, write_json, CommandError, CommandResult};
use crate::io::{create_csv, fmt_f64, level_label, load_csv, Table};
use crate::manifest::{file_digest, RunConfig, RunDir};
use crate::plot::{interval_svg, Band};

pub const INTERVALS_FILE: &str = "intervals.csv";
pub const ARCHIVE_FILE: &str = "archive.json";
pub const PLOT_FILE: &str = "intervals.svg";
pub const ARCHIVE_FORMAT: &str = "iforge-archive-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRun {
    /// Training CSV; ignored when an archive is given.
    pub data: Option<PathBuf>,
    /// Previously written archive to predict from.
    pub archive: Option<PathBuf>,
    /// Points to predict; defaults to the training CSV.
    pub test: Option<PathBuf>,
    /// SHA-256 of every input file, in the order data, archive, test.
    pub input_sha256: Vec<String>,
    pub target: Option<String>,
    pub method: Method,
    pub t: usize,
    pub p: f64,
    pub alphas: Vec<f64>,
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub plot: bool,
}

impl PredictRun {
    /// Check the flag combination and record input digests.
    pub fn resolve(mut self) -> CommandResult<Self> {
        if self.data.is_none() && self.archive.is_none() {
            return Err(usage("predict needs --data (to train) or --archive"));
        }
        if self.archive.is_some() && self.test.is_none() && self.data.is_none() {
            return Err(usage("predicting from --archive needs --test or --data for the points to predict"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(usage("--alpha values must lie in (0, 1)"));
        }
        if self.archive.is_none() {
            if self.method.uses_t() && self.t < 2 {
                return Err(usage(format!("{} needs --T >= 2", self.method)));
            }
            if self.method.uses_p() && !(self.p > 0.0 && self.p <= 1.0) {
                return Err(usage("--p must lie in (0, 1]"));
            }
            if self.epochs == 0 || self.batch_size == 0 || self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
                return Err(usage("epochs, batch size and learning rate must be positive"));
            }
        }
        self.input_sha256.clear();
        for path in [&self.data, &self.archive, &self.test].into_iter().flatten() {
            if !path.is_file() {
                return Err(usage(format!("{} does not exist", path.display())));
            }
            self.input_sha256.push(file_digest(path).with_context(|| format!("cannot read {}", path.display()))?);
        }
        Ok(self)
    }
}

/// A trained interval model, everything on the standardized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub format: String,
    pub method: Method,
    pub t: usize,
    pub p: f64,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub scaler: Standardizer,
    /// Training-residual `σ̂²_e` of the method's center.
    pub aleatoric_var: f64,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// The delta method refits `JᵀJ` from the stored training set.
    Delta {
        params: Parameters,
        train: Dataset,
    },
    Ensemble {
        ensemble: Ensemble,
        point: Option<Parameters>,
    },
    McDropout {
        params: Parameters,
    },
}

impl Archive {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let archive: Self =
            serde_json::from_str(&text).with_context(|| format!("{} is not a valid archive", path.display()))?;
        archive.check().with_context(|| format!("{} is malformed", path.display()))?;
        Ok(archive)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.format != ARCHIVE_FORMAT {
            return Err(anyhow!("unknown archive format `{}`", self.format));
        }
        let d = self.feature_names.len();
        if self.scaler.feature_means.len() != d || self.scaler.feature_stds.len() != d {
            return Err(anyhow!("scaler does not match {d} features"));
        }
        if !(self.aleatoric_var >= 0.0 && self.aleatoric_var.is_finite()) {
            return Err(anyhow!("invalid aleatoric variance"));
        }
        let input_dims: Vec<usize> = match &self.model {
            Model::Delta { params, train } => vec![params.spec().input_dim(), train.dim()],
            Model::McDropout { params } => vec![params.spec().input_dim()],
            Model::Ensemble { ensemble, point } => {
                if ensemble.members.len() < 2 {
                    return Err(anyhow!("ensemble needs at least two members"));
                }
                if ensemble.members.iter().any(|m| m.mask.as_ref().is_some_and(|k| !k.fits(m.params.spec()))) {
                    return Err(anyhow!("member mask does not fit its network"));
                }
                ensemble
                    .members
                    .iter()
                    .map(|m| m.params.spec().input_dim())
                    .chain(point.iter().map(|p| p.spec().input_dim()))
                    .collect()
            }
        };
        if input_dims.iter().any(|&k| k != d) {
            return Err(anyhow!("network input dimension does not match {d} features"));
        }
        let expected = match self.method {
            Method::Delta => matches!(self.model, Model::Delta { .. }),
            Method::McDropout => matches!(self.model, Model::McDropout { .. }),
            Method::BootNormal | Method::BootBiasCorrected => {
                matches!(self.model, Model::Ensemble { point: Some(_), .. })
            }
            _ => matches!(self.model, Model::Ensemble { .. }),
        };
        if !expected {
            return Err(anyhow!("model does not match method {}", self.method));
        }
        Ok(())
    }
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64).collect()
}

fn columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect()
}

/// Train the configured method on a standardized copy of `train`.
pub fn train_archive<E: Executor>(
    exec: &E,
    run: &PredictRun,
    train_raw: &Dataset,
    feature_names: Vec<String>,
    target_name: String,
) -> CommandResult<Archive> {
    let scaler = Standardizer::fit(train_raw, true)?;
    let train = scaler.apply(train_raw)?;
    let spec = NetworkSpec::new(train.dim(), run.hidden_widths.clone()).map_err(|e| usage(e.to_string()))?;
    let tc = TrainConfig::new(run.epochs, run.batch_size.min(train.len()), run.learning_rate, run.seed);
    let targets = train.targets();
    let (model, aleatoric_var) = match run.method {
        Method::Delta => {
            let params = fit_single(&train, &spec, &tc)?;
            let delta = DeltaMethod::fit(&params, &train)?;
            (Model::Delta { params, train: train.clone() }, delta.aleatoric_var())
        }
        Method::McDropout => {
            let params = mc_dropout_fit(&train, &spec, &tc, run.p)?;
            let passes =
                mc_dropout_predict_all(exec, &params, &train, run.t, run.p, derive(run.seed, Stream::McPasses, 1))?;
            let var = aleatoric_variance(&column_means(&passes), targets)?;
            (Model::McDropout { params }, var)
        }
        method => {
            let ensemble = if method == Method::ExtraNn {
                extra_nn_fit(exec, &train, run.t, run.p, &spec, &tc)?
            } else {
                Ensemble { method, ..bootstrap_fit(exec, &train, run.t, &spec, &tc)? }
            };
            let point = match method {
                Method::BootNormal | Method::BootBiasCorrected => {
                    Some(fit_single(&train, &spec, &tc.with_seed(derive(run.seed, Stream::Init, 1)))?)
                }
                _ => None,
            };
            let var = match &point {
                Some(params) => aleatoric_variance(&predict_all(params, &train, None)?, targets)?,
                None => aleatoric_variance(&column_means(&ensemble.predict_all(exec, &train)?), targets)?,
            };
            (Model::Ensemble { ensemble, point }, var)
        }
    };
    Ok(Archive {
        format: ARCHIVE_FORMAT.to_owned(),
        method: run.method,
        t: run.t,
        p: run.p,
        seed: run.seed,
        feature_names,
        target_name,
        scaler,
        aleatoric_var,
        model,
    })
}

/// `intervals[a][i]` on the original target scale for the raw rows of `points`.
pub fn archive_intervals<E: Executor>(
    exec: &E,
    archive: &Archive,
    points: &Dataset,
    alphas: &[f64],
) -> CommandResult<Vec<Vec<PredictionInterval>>> {
    let test = archive.scaler.apply(points)?;
    let av = archive.aleatoric_var;
    let n = test.len();
    let scaled: Vec<Vec<PredictionInterval>> = match &archive.model {
        Model::Delta { params, train } => {
            let delta = DeltaMethod::fit(params, train)?.with_aleatoric_variance(av);
            alphas
                .iter()
                .map(|&a| (0..n).map(|i| delta.interval(test.row(i), a)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?
        }
        Model::McDropout { params } => {
            let passes = mc_dropout_predict_all(
                exec,
                params,
                &test,
                archive.t,
                archive.p,
                derive(archive.seed, Stream::McPasses, 0),
            )?;
            let cols = columns(&passes);
            alphas
                .iter()
                .map(|&a| cols.iter().map(|c| mc_dropout_interval(c, av, a)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?
        }
        Model::Ensemble { ensemble, point } => {
            let cols = columns(&ensemble.predict_all(exec, &test)?);
            let point = point.as_ref().map(|p| predict_all(p, &test, None)).transpose()?;
            let method = archive.method;
            alphas
                .iter()
                .map(|&a| {
                    cols.iter()
                        .enumerate()
                        .map(|(i, c)| match (method, &point) {
                            (Method::BootPercentile, _) => boot_percentile_interval(c, a),
                            (Method::BootNormal, Some(f)) => boot_normal_interval(f[i], c, av, a),
                            (Method::BootBiasCorrected, Some(f)) => boot_bias_corrected_interval(f[i], c, av, a),
                            (Method::ExtraNn, _) => extra_nn_interval(c, av, a),
                            _ => boot_mean_interval(c, av, a),
                        })
                        .collect::<Result<_, _>>()
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(scaled.iter().map(|level| level.iter().map(|iv| iv.invert_target(&archive.scaler)).collect()).collect())
}

pub fn run_predict(run: PredictRun, out: &Path) -> CommandResult<PathBuf> {
    let run = run.resolve()?;
    let exec = executor()?;
    let (archive, trained) = match (&run.archive, &run.data) {
        (Some(path), _) => (Archive::read(path).map_err(CommandError::Runtime)?, false),
        (None, Some(data)) => {
            let labelled = load_csv(data, run.target.as_deref())?;
            (train_archive(&exec, &run, &labelled.data, labelled.feature_names, labelled.target_name)?, true)
        }
        (None, None) => unreachable!("resolve() requires one input"),
    };

    let test_path = run.test.as_ref().or(run.data.as_ref()).expect("resolve() requires points to predict");
    let table = Table::read(test_path)?;
    let (features, targets) = table.select(&archive.feature_names, &archive.target_name)?;
    let n = table.rows.len();
    let points = Dataset::new(features, targets.clone().unwrap_or_else(|| vec![0.0; n]), archive.feature_names.len())?;
    let intervals = archive_intervals(&exec, &archive, &points, &run.alphas)?;

    let mut dir = RunDir::create(out, RunConfig::Predict(run.clone()))?;
    let hash = dir.hash.clone();
    if trained {
        write_json(&dir.artifact(ARCHIVE_FILE), &archive)?;
    }
    let mut csv = create_csv(&dir.artifact(INTERVALS_FILE), &hash)?;
    let mut header = vec!["index".to_owned()];
    if targets.is_some() {
        header.push(archive.target_name.clone());
    }
    header.push("center".to_owned());
    for &a in &run.alphas {
        let l = level_label(a);
        header.push(format!("lower_{l}"));
        header.push(format!("upper_{l}"));
    }
    header.extend(["epistemic_var".to_owned(), "aleatoric_var".to_owned()]);
    csv.write_record(&header)?;
    for i in 0..n {
        let first = &intervals[0][i];
        let mut record = vec![i.to_string()];
        if let Some(y) = &targets {
            record.push(fmt_f64(y[i]));
        }
        record.push(fmt_f64(first.center));
        for level in &intervals {
            record.push(fmt_f64(level[i].lower));
            record.push(fmt_f64(level[i].upper));
        }
        record.push(fmt_f64(first.epistemic_var));
        record.push(fmt_f64(first.aleatoric_var));
        csv.write_record(&record)?;
    }
    csv.flush()?;

    if run.plot {
        let center: Vec<f64> = intervals[0].iter().map(|iv| iv.center).collect();
        let bounds: Vec<(Vec<f64>, Vec<f64>)> = intervals
            .iter()
            .map(|level| (level.iter().map(|iv| iv.lower).collect(), level.iter().map(|iv| iv.upper).collect()))
            .collect();
        let bands: Vec<Band<'_>> =
            run.alphas.iter().zip(&bounds).map(|(&alpha, (lower, upper))| Band { alpha, lower, upper }).collect();
        let title = format!("{} intervals, {} points", archive.method, n);
        std::fs::write(dir.artifact(PLOT_FILE), interval_svg(&title, &center, &bands, targets.as_deref()))?;
    }

    println!("{} intervals for {n} points from {}", archive.method, test_path.display());
    let manifest = dir.finish()?;
    let dir = manifest.parent().unwrap_or(out).to_owned();
    println!("wrote {}", dir.display());
    Ok(dir)
}
