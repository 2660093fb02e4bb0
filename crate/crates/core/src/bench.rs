//! Repeated random-split benchmark: per split, standardize features and
//! target on the training fold, fit one method, and score RMSPE on the
//! original target scale.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::dgp::Standardizer;
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::intervals::{extra_nn_fit, fit_single, mc_dropout_fit, mc_dropout_predict_all};
use crate::nn::{predict_all, NetworkSpec, TrainConfig};
use crate::rng::{derive, rng_from_seed, Stream};
use crate::stats::{mean, sample_std};

/// Smallest dataset the split protocol accepts.
pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BenchMethod {
    /// Average of `t` independently trained, structurally thinned networks.
    ExtraNn,
    /// One network trained with dropout, averaged over `t` stochastic passes.
    McDropout,
    /// One plain network.
    Single,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::ExtraNn => "extra_nn",
            BenchMethod::McDropout => "mc_dropout",
            BenchMethod::Single => "single",
        }
    }
}

impl core::fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for BenchMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extra_nn" => Ok(BenchMethod::ExtraNn),
            "mc_dropout" => Ok(BenchMethod::McDropout),
            "single" => Ok(BenchMethod::Single),
            other => Err(invalid(alloc::format!("unknown benchmark method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkConfig {
    pub method: BenchMethod,
    /// Ensemble members or MC passes; ignored by `single`.
    pub t: usize,
    pub n_splits: usize,
    pub train_fraction: f64,
    pub hidden_width: usize,
    pub epochs: usize,
    /// Retention probability.
    pub p: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl BenchmarkConfig {
    /// 20 splits at 90/10, one hidden layer of 50 units, 40 epochs, retention
    /// 0.95, batch 32 and Adam at its customary default rate of 0.001.
    pub fn standard(method: BenchMethod, t: usize, seed: u64) -> Self {
        Self {
            method,
            t,
            n_splits: 20,
            train_fraction: 0.9,
            hidden_width: 50,
            epochs: 40,
            p: 0.95,
            batch_size: 32,
            learning_rate: 0.001,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_splits == 0 {
            return Err(invalid("need at least one split"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid("train fraction must lie in (0, 1)"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid("p must lie in (0, 1]"));
        }
        let min_t = match self.method {
            BenchMethod::ExtraNn => 2,
            BenchMethod::McDropout => 1,
            BenchMethod::Single => 0,
        };
        if self.t < min_t {
            return Err(invalid(alloc::format!("{} needs T >= {min_t}", self.method)));
        }
        if self.hidden_width == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("width, epochs and batch size must be positive"));
        }
        Ok(())
    }
}

/// One train/test partition of row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `n_splits` independent uniform permutations of `0..n`, each cut after
/// `floor(train_fraction * n)` rows.
pub fn split_protocol(n: usize, config: &BenchmarkConfig) -> Result<Vec<Split>> {
    config.validate()?;
    if n < MIN_ROWS {
        return Err(invalid(alloc::format!("need at least {MIN_ROWS} rows, got {n}")));
    }
    let n_train = libm::floor(config.train_fraction * n as f64) as usize;
    if n_train == 0 || n_train == n {
        return Err(invalid("train fraction leaves an empty fold"));
    }
    Ok((0..config.n_splits)
        .map(|s| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng_from_seed(derive(config.seed, Stream::Split, s as u64)));
            let test = perm.split_off(n_train);
            Split { train: perm, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkResult {
    pub per_split: Vec<f64>,
    pub mean_rmspe: f64,
    /// Sample standard deviation over `sqrt(n_splits)`; absent for one split.
    pub se: Option<f64>,
}

impl BenchmarkResult {
    pub fn from_splits(per_split: Vec<f64>) -> Result<Self> {
        if per_split.is_empty() {
            return Err(crate::Error::Empty("split scores"));
        }
        let se = sample_std(&per_split).map(|s| s / libm::sqrt(per_split.len() as f64));
        Ok(Self { mean_rmspe: mean(&per_split), se, per_split })
    }
}

/// Fit and score one split; returns the test predictions on the original
/// scale.
pub fn evaluate_split<E: Executor>(
    exec: &E,
    data: &Dataset,
    split: &Split,
    config: &BenchmarkConfig,
    index: u64,
) -> Result<Vec<f64>> {
    let scaler = Standardizer::fit(&data.subset(&split.train), true)?;
    let train = scaler.apply(&data.subset(&split.train))?;
    let test = scaler.apply(&data.subset(&split.test))?;
    let spec = NetworkSpec::new(data.dim(), alloc::vec![config.hidden_width])?;
    let seed = derive(config.seed, Stream::Split, index);
    let tc = TrainConfig::new(config.epochs, config.batch_size.min(train.len()), config.learning_rate, seed);
    let scaled = match config.method {
        BenchMethod::Single => {
            let params = fit_single(&train, &spec, &tc)?;
            predict_all(&params, &test, None)?
        }
        BenchMethod::ExtraNn => {
            let preds = extra_nn_fit(exec, &train, config.t, config.p, &spec, &tc)?.predict_all(exec, &test)?;
            column_means(&preds)
        }
        BenchMethod::McDropout => {
            let params = mc_dropout_fit(&train, &spec, &tc, config.p)?;
            let passes = derive(seed, Stream::McPasses, 0);
            column_means(&mc_dropout_predict_all(exec, &params, &test, config.t, config.p, passes)?)
        }
    };
    Ok(scaled.into_iter().map(|v| scaler.invert_target(v)).collect())
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let t = rows.len() as f64;
    let mut out = alloc::vec![0.0; rows.first().map_or(0, Vec::len)];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= t);
    out
}

pub fn rmspe(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    crate::error::check_len(targets.len(), predictions.len())?;
    if targets.is_empty() {
        return Err(crate::Error::Empty("targets"));
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(libm::sqrt(sse / targets.len() as f64))
}

/// Run every split of the protocol. Splits run through `exec`; the ensemble
/// inside each split runs sequentially so nested pools are never needed.
pub fn run_benchmark<E: Executor>(exec: &E, data: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    let splits = split_protocol(data.len(), config)?;
    let per_split = exec
        .map(splits.len(), |s| {
            let split = &splits[s];
            let preds = evaluate_split(&crate::exec::Sequential, data, split, config, s as u64)?;
            let targets: Vec<f64> = split.test.iter().map(|&i| data.target(i)).collect();
            rmspe(&preds, &targets)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    BenchmarkResult::from_splits(per_split)
}
