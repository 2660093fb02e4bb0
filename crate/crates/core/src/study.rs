//! The simulation coverage study: one replication generates a fresh
//! train/test sample from a process, fits one interval method and scores its
//! intervals on the test sample.

use alloc::vec::Vec;

use crate::dgp::{train_test_split, Dgp, Standardizer};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::intervals::{
    bootstrap_fit, coverage_report, extra_nn_fit, fit_single, interval_table, mc_dropout_fit, mc_dropout_predict_all,
    mspe_decomposition, CoverageReport, DeltaMethod, Method, MspeDecomposition, PredictionInterval, DEFAULT_ALPHAS,
};
use crate::nn::{predict_all, NetworkSpec, TrainConfig};
use crate::rng::{derive, Stream};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyConfig {
    pub dgp: Dgp,
    pub method: Method,
    /// Ensemble members or MC passes.
    pub t: usize,
    /// Retention probability for `mc_dropout` and `extra_nn`.
    pub p: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub alphas: Vec<f64>,
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Train on a standardized target and map predictions and intervals back.
    pub scale_target: bool,
    pub seed: u64,
}

impl StudyConfig {
    /// Settings of the published study: 1200/300 rows, batch 32, a 5-unit
    /// network with learning rate 0.1 for 10 epochs on the linear process and
    /// the true 3-2 architecture with learning rate 0.01 for 80 epochs on the
    /// nonlinear one.
    pub fn standard(dgp: Dgp, method: Method, t: usize, p: f64, seed: u64) -> Self {
        let (hidden_widths, epochs, learning_rate) = match dgp {
            Dgp::Linear => (alloc::vec![5], 10, 0.1),
            Dgp::Nonlinear => (alloc::vec![3, 2], 80, 0.01),
        };
        Self {
            dgp,
            method,
            t,
            p,
            n_train: 1200,
            n_test: 300,
            alphas: DEFAULT_ALPHAS.to_vec(),
            hidden_widths,
            epochs,
            batch_size: 32,
            learning_rate,
            scale_target: matches!(dgp, Dgp::Nonlinear),
            seed,
        }
    }

    pub fn spec(&self) -> Result<NetworkSpec> {
        NetworkSpec::new(Dgp::DIM, self.hidden_widths.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.uses_t() && self.t < 2 {
            return Err(invalid(alloc::format!("{} needs T >= 2", self.method)));
        }
        if self.method.uses_p() && !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid("p must lie in (0, 1]"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(invalid("significance levels must lie in (0, 1)"));
        }
        if self.n_train <= Dgp::DIM || self.n_test == 0 {
            return Err(invalid("need more training rows than regressors and a non-empty test set"));
        }
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("epochs, batch size and learning rate must be positive"));
        }
        self.spec().map(drop)
    }
}

/// Scores of one replication.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Replication {
    pub index: u64,
    pub report: CoverageReport,
    /// Ensemble error decomposition against the noiseless `f(x)`.
    pub decomposition: Option<MspeDecomposition>,
    /// Ridge added to `JᵀJ` by the delta method.
    pub ridge: Option<f64>,
    pub aleatoric_var: f64,
}

/// Run replication `index` of `config`.
pub fn run_replication<E: Executor>(exec: &E, config: &StudyConfig, index: u64) -> Result<Replication> {
    config.validate()?;
    let seed = derive(config.seed, Stream::Replication, index);
    let all = config.dgp.generate(config.n_train + config.n_test, seed)?;
    let (train_raw, test_raw) = train_test_split(&all, config.n_train)?;
    let scaler = Standardizer::fit(&train_raw, config.scale_target)?;
    let train = scaler.apply(&train_raw)?;
    let test = scaler.apply(&test_raw)?;
    let spec = config.spec()?;
    let tc = TrainConfig::new(config.epochs, config.batch_size.min(train.len()), config.learning_rate, seed);
    let targets = test.targets();
    let test_truth = test.noiseless();

    let (predictions, intervals, decomposition, ridge, aleatoric_var) = match config.method {
        Method::Delta => {
            let params = fit_single(&train, &spec, &tc)?;
            let delta = DeltaMethod::fit(&params, &train)?;
            let predictions = predict_all(&params, &test, None)?;
            let intervals: Vec<Vec<PredictionInterval>> = config
                .alphas
                .iter()
                .map(|&a| (0..test.len()).map(|i| delta.interval(test.row(i), a)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            (predictions, intervals, None, Some(delta.ridge()), delta.aleatoric_var())
        }
        method => {
            let (member_preds, point_preds) = match method {
                Method::McDropout => {
                    let params = mc_dropout_fit(&train, &spec, &tc, config.p)?;
                    let passes = derive(seed, Stream::McPasses, 0);
                    (mc_dropout_predict_all(exec, &params, &test, config.t, config.p, passes)?, None)
                }
                Method::ExtraNn => {
                    let ensemble = extra_nn_fit(exec, &train, config.t, config.p, &spec, &tc)?;
                    (ensemble.predict_all(exec, &test)?, None)
                }
                _ => {
                    let ensemble = bootstrap_fit(exec, &train, config.t, &spec, &tc)?;
                    let point = match method {
                        Method::BootNormal | Method::BootBiasCorrected => {
                            let params = fit_single(&train, &spec, &tc.with_seed(derive(seed, Stream::Init, 1)))?;
                            Some(predict_all(&params, &test, None)?)
                        }
                        _ => None,
                    };
                    (ensemble.predict_all(exec, &test)?, point)
                }
            };
            let table = interval_table(method, &member_preds, point_preds.as_deref(), targets, &config.alphas)?;
            let decomposition = if method == Method::McDropout {
                None
            } else {
                Some(mspe_decomposition(&member_preds, targets, test_truth)?)
            };
            (table.predictions, table.intervals, decomposition, None, table.aleatoric_var)
        }
    };
    let (predictions, intervals, decomposition, aleatoric_var) = if config.scale_target {
        let s = scaler.target_std;
        let s2 = s * s;
        let predictions = predictions.iter().map(|&v| scaler.invert_target(v)).collect();
        let intervals =
            intervals.into_iter().map(|level| level.iter().map(|iv| iv.invert_target(&scaler)).collect()).collect();
        let decomposition = decomposition.map(|d| MspeDecomposition {
            bias: d.bias * s,
            variance: d.variance * s2,
            covariance: d.covariance * s2,
            mspe: d.mspe * s2,
            ..d
        });
        (predictions, intervals, decomposition, aleatoric_var * s2)
    } else {
        (predictions, intervals, decomposition, aleatoric_var)
    };
    let report = coverage_report(&intervals, test_raw.targets(), &predictions)?;
    Ok(Replication { index, report, decomposition, ridge, aleatoric_var })
}

/// All replications of one configuration and their average.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyResult {
    pub config: StudyConfig,
    pub replications: Vec<Replication>,
    pub summary: CoverageReport,
}

pub fn run_study<E: Executor>(exec: &E, config: &StudyConfig, replications: usize) -> Result<StudyResult> {
    if replications == 0 {
        return Err(invalid("need at least one replication"));
    }
    let reps: Vec<Replication> =
        exec.map(replications, |r| run_replication(exec, config, r as u64)).into_iter().collect::<Result<_>>()?;
    let reports: Vec<CoverageReport> = reps.iter().map(|r| r.report.clone()).collect();
    let summary = CoverageReport::average(&reports)?;
    Ok(StudyResult { config: config.clone(), replications: reps, summary })
}
