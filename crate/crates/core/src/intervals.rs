//! Prediction-interval constructors, coverage metrics and the ensemble MSPE
//! decomposition.
//!
//! Every normal-theory interval has the form `center ± z_{1-α/2} √(v_ω + v_e)`
//! where `v_ω` is the epistemic term of the method and `v_e` the aleatoric
//! variance. The methods differ in the center and in how `v_ω` is formed:
//!
//! | method | center | `v_ω` |
//! |---|---|---|
//! | delta | `f(x; ω̂)` | `σ̂²_e S(x)` |
//! | boot_normal | `f(x; ω̂)` | `(1/T) Σ (f_t - f̄)²` |
//! | boot_bias_corrected | `2 f(x; ω̂) - f̄` | same |
//! | boot_mean, extra_nn | `f̄` | `(1/T) Σ (f_t - f̄)²` divided by `T` |
//! | mc_dropout | `f̄_MC` | `(1/T) Σ (ŷ_t - f̄_MC)²`, not divided by `T` |
//!
//! The percentile bootstrap reads its bounds off interpolated quantiles of the
//! member predictions instead.
//!
//! The aleatoric variance `σ̂²_e` is the mean squared residual of the method's
//! center on the sample it is evaluated on. Estimating it on the test sample
//! is optimistic if that sample was also used for tuning; keep a hold-out set
//! for tuning.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dgp::Standardizer;
use crate::error::{check_len, invalid, Error, Result};
use crate::stats::{mean, mean_var, quantile_sorted, sorted_copy, z_two_sided};

mod delta;
mod ensemble;
mod metrics;

pub use delta::{delta_interval, DeltaMethod, RIDGE_FACTOR};
pub use ensemble::{
    bootstrap_fit, bootstrap_fit_with_seeds, bootstrap_member, extra_nn_fit, extra_nn_member, fit_single,
    mc_dropout_fit, mc_dropout_predict, mc_dropout_predict_all, member_seeds, resample_indices, unique_fraction,
    Ensemble, Member,
};
pub use metrics::{coverage_report, mspe_decomposition, CoverageReport, MspeDecomposition};

/// Significance levels reported by default.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Delta,
    BootPercentile,
    BootNormal,
    BootBiasCorrected,
    BootMean,
    McDropout,
    ExtraNn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Delta,
        Method::BootPercentile,
        Method::BootNormal,
        Method::BootBiasCorrected,
        Method::BootMean,
        Method::McDropout,
        Method::ExtraNn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Delta => "delta",
            Method::BootPercentile => "boot_percentile",
            Method::BootNormal => "boot_normal",
            Method::BootBiasCorrected => "boot_bias_corrected",
            Method::BootMean => "boot_mean",
            Method::McDropout => "mc_dropout",
            Method::ExtraNn => "extra_nn",
        }
    }

    /// Whether the method trains a bootstrap ensemble.
    pub fn is_bootstrap(self) -> bool {
        matches!(self, Method::BootPercentile | Method::BootNormal | Method::BootBiasCorrected | Method::BootMean)
    }

    /// Whether the method uses the retention probability `p`.
    pub fn uses_p(self) -> bool {
        matches!(self, Method::McDropout | Method::ExtraNn)
    }

    /// Whether the method uses a number of members or passes `T`.
    pub fn uses_t(self) -> bool {
        self != Method::Delta
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boot_bias" => Ok(Method::BootBiasCorrected),
            _ => Method::ALL
                .into_iter()
                .find(|m| m.name() == s)
                .ok_or_else(|| invalid(alloc::format!("unknown method `{s}`"))),
        }
    }
}

/// One interval at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionInterval {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub method: Method,
    /// Epistemic term exactly as it enters the half-width (after any `1/T`).
    pub epistemic_var: f64,
    pub aleatoric_var: f64,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    /// Whether `other` lies inside `self`.
    pub fn encloses(&self, other: &PredictionInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    /// Map an interval built on a standardized target back to the original
    /// scale. The map is increasing, so bounds stay ordered.
    pub fn invert_target(&self, scaler: &Standardizer) -> Self {
        let s2 = scaler.target_std * scaler.target_std;
        Self {
            center: scaler.invert_target(self.center),
            lower: scaler.invert_target(self.lower),
            upper: scaler.invert_target(self.upper),
            epistemic_var: self.epistemic_var * s2,
            aleatoric_var: self.aleatoric_var * s2,
            ..*self
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(alloc::format!("significance level must lie in (0, 1), got {alpha}")))
    }
}

fn check_var(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(alloc::format!("{what} must be finite and non-negative, got {v}")))
    }
}

/// `center ± z_{1-α/2} √(epistemic_var + aleatoric_var)`.
pub fn normal_interval(
    center: f64,
    epistemic_var: f64,
    aleatoric_var: f64,
    alpha: f64,
    method: Method,
) -> Result<PredictionInterval> {
    check_alpha(alpha)?;
    check_var(epistemic_var, "epistemic variance")?;
    check_var(aleatoric_var, "aleatoric variance")?;
    let half = z_two_sided(alpha)? * libm::sqrt(epistemic_var + aleatoric_var);
    Ok(PredictionInterval {
        center,
        lower: center - half,
        upper: center + half,
        alpha,
        method,
        epistemic_var,
        aleatoric_var,
    })
}

fn members_checked(member_preds: &[f64], min: usize) -> Result<()> {
    if member_preds.len() < min {
        return Err(invalid(alloc::format!("need at least {min} member predictions, got {}", member_preds.len())));
    }
    if member_preds.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow);
    }
    Ok(())
}

/// Homoscedastic noise variance `(1/n) Σ (y_i - f̂(x_i))²`.
pub fn aleatoric_variance(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    check_len(predictions.len(), targets.len())?;
    Ok(predictions.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / predictions.len() as f64)
}

/// Percentile bootstrap interval `[q̂_{α/2}, q̂_{1-α/2}]` centered at the member mean.
pub fn boot_percentile_interval(member_preds: &[f64], alpha: f64) -> Result<PredictionInterval> {
    check_alpha(alpha)?;
    members_checked(member_preds, 2)?;
    let sorted = sorted_copy(member_preds);
    let (center, spread) = mean_var(member_preds);
    Ok(PredictionInterval {
        center,
        lower: quantile_sorted(&sorted, alpha / 2.0),
        upper: quantile_sorted(&sorted, 1.0 - alpha / 2.0),
        alpha,
        method: Method::BootPercentile,
        epistemic_var: spread,
        aleatoric_var: 0.0,
    })
}

/// Normal bootstrap interval around the original-sample prediction with the
/// full member spread as epistemic term.
pub fn boot_normal_interval(
    point_pred: f64,
    member_preds: &[f64],
    aleatoric_var: f64,
    alpha: f64,
) -> Result<PredictionInterval> {
    members_checked(member_preds, 2)?;
    let (_, spread) = mean_var(member_preds);
    normal_interval(point_pred, spread, aleatoric_var, alpha, Method::BootNormal)
}

/// As [`boot_normal_interval`] with the bias-corrected center `2 f(x; ω̂) - f̄`.
pub fn boot_bias_corrected_interval(
    point_pred: f64,
    member_preds: &[f64],
    aleatoric_var: f64,
    alpha: f64,
) -> Result<PredictionInterval> {
    members_checked(member_preds, 2)?;
    let (m, spread) = mean_var(member_preds);
    normal_interval(2.0 * point_pred - m, spread, aleatoric_var, alpha, Method::BootBiasCorrected)
}

/// `f̄ ± z √(σ²_ω / T + σ²_e)`: the interval of an average of `T` members
/// whose errors are assumed uncorrelated.
fn ensemble_mean_interval(
    member_preds: &[f64],
    aleatoric_var: f64,
    alpha: f64,
    method: Method,
) -> Result<PredictionInterval> {
    members_checked(member_preds, 1)?;
    let (m, spread) = mean_var(member_preds);
    normal_interval(m, spread / member_preds.len() as f64, aleatoric_var, alpha, method)
}

pub fn boot_mean_interval(member_preds: &[f64], aleatoric_var: f64, alpha: f64) -> Result<PredictionInterval> {
    ensemble_mean_interval(member_preds, aleatoric_var, alpha, Method::BootMean)
}

pub fn extra_nn_interval(member_preds: &[f64], aleatoric_var: f64, alpha: f64) -> Result<PredictionInterval> {
    ensemble_mean_interval(member_preds, aleatoric_var, alpha, Method::ExtraNn)
}

/// `f̄_MC ± z √(σ²_e + (1/T) Σ (ŷ_t - f̄_MC)²)`. The pass spread is not
/// divided by `T`: all passes share one set of weights.
pub fn mc_dropout_interval(samples: &[f64], aleatoric_var: f64, alpha: f64) -> Result<PredictionInterval> {
    members_checked(samples, 1)?;
    let (m, spread) = mean_var(samples);
    normal_interval(m, spread, aleatoric_var, alpha, Method::McDropout)
}

/// Per-point intervals for a whole test set, at several significance levels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalTable {
    pub method: Method,
    pub alphas: Vec<f64>,
    /// Point prediction of the method at every test point.
    pub predictions: Vec<f64>,
    /// `intervals[a][i]` is the interval at `alphas[a]` for test point `i`.
    pub intervals: Vec<Vec<PredictionInterval>>,
    pub aleatoric_var: f64,
}

impl IntervalTable {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

/// Build the intervals of a sampling-based method from its member (or pass)
/// predictions `member_preds[t][i]` on a test set with `targets`.
///
/// `point_preds` are the original-sample network's predictions and are
/// required by `boot_normal` and `boot_bias_corrected`. The aleatoric variance
/// is the mean squared residual of the method's own center over the test set.
pub fn interval_table(
    method: Method,
    member_preds: &[Vec<f64>],
    point_preds: Option<&[f64]>,
    targets: &[f64],
    alphas: &[f64],
) -> Result<IntervalTable> {
    if method == Method::Delta {
        return Err(invalid("delta intervals come from DeltaMethod, not from member predictions"));
    }
    if member_preds.is_empty() {
        return Err(Error::Empty("member predictions"));
    }
    let n = targets.len();
    for row in member_preds {
        check_len(n, row.len())?;
    }
    let columns: Vec<Vec<f64>> = (0..n).map(|i| member_preds.iter().map(|r| r[i]).collect()).collect();
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let point = match method {
        Method::BootNormal | Method::BootBiasCorrected => {
            let p = point_preds.ok_or_else(|| invalid(alloc::format!("{method} needs original-sample predictions")))?;
            check_len(n, p.len())?;
            Some(p)
        }
        _ => None,
    };
    let predictions: Vec<f64> = match (method, point) {
        (Method::BootNormal, Some(p)) => p.to_vec(),
        (Method::BootBiasCorrected, Some(p)) => p.iter().zip(&means).map(|(f, m)| 2.0 * f - m).collect(),
        _ => means.clone(),
    };
    // σ̂²_e from the residuals of the original network for the normal
    // bootstrap, of the member average otherwise.
    let aleatoric_var = match point {
        Some(p) => aleatoric_variance(p, targets)?,
        None => aleatoric_variance(&means, targets)?,
    };
    let mut intervals = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let row: Result<Vec<PredictionInterval>> = columns
            .iter()
            .enumerate()
            .map(|(i, c)| match method {
                Method::BootPercentile => boot_percentile_interval(c, alpha),
                Method::BootNormal => boot_normal_interval(point.unwrap()[i], c, aleatoric_var, alpha),
                Method::BootBiasCorrected => boot_bias_corrected_interval(point.unwrap()[i], c, aleatoric_var, alpha),
                Method::BootMean => boot_mean_interval(c, aleatoric_var, alpha),
                Method::ExtraNn => extra_nn_interval(c, aleatoric_var, alpha),
                Method::McDropout => mc_dropout_interval(c, aleatoric_var, alpha),
                Method::Delta => unreachable!(),
            })
            .collect();
        intervals.push(row?);
    }
    let aleatoric_var = if method == Method::BootPercentile { 0.0 } else { aleatoric_var };
    Ok(IntervalTable { method, alphas: alphas.to_vec(), predictions, intervals, aleatoric_var })
}
