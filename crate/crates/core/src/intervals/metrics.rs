use alloc::vec::Vec;

use super::PredictionInterval;
use crate::error::{check_len, invalid, Error, Result};
use crate::stats::mean;

/// Miss rates and point-prediction errors of one method on one test set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    pub alphas: Vec<f64>,
    /// Fraction of targets outside the interval, per entry of `alphas`.
    pub miss_rates: Vec<f64>,
    pub mape: f64,
    pub mspe: f64,
    pub rmspe: f64,
    pub n_test: usize,
}

impl CoverageReport {
    /// Miss rate at `alpha`, if it was evaluated.
    pub fn miss_rate(&self, alpha: f64) -> Option<f64> {
        self.alphas.iter().position(|&a| a == alpha).map(|k| self.miss_rates[k])
    }

    /// Element-wise average of reports over the same alphas.
    pub fn average(reports: &[CoverageReport]) -> Result<CoverageReport> {
        let first = reports.first().ok_or(Error::Empty("coverage reports"))?;
        if reports.iter().any(|r| r.alphas != first.alphas) {
            return Err(invalid("cannot average reports over different significance levels"));
        }
        let avg = |f: &dyn Fn(&CoverageReport) -> f64| mean(&reports.iter().map(f).collect::<Vec<_>>());
        let miss_rates = (0..first.alphas.len()).map(|k| avg(&|r| r.miss_rates[k])).collect();
        let mspe = avg(&|r| r.mspe);
        Ok(CoverageReport {
            alphas: first.alphas.clone(),
            miss_rates,
            mape: avg(&|r| r.mape),
            mspe,
            rmspe: libm::sqrt(mspe),
            n_test: reports.iter().map(|r| r.n_test).sum(),
        })
    }
}

/// Evaluate `intervals[a][i]` (level `a`, point `i`) and `predictions[i]`
/// against `targets[i]`.
pub fn coverage_report(
    intervals: &[Vec<PredictionInterval>],
    targets: &[f64],
    predictions: &[f64],
) -> Result<CoverageReport> {
    let n = targets.len();
    if n == 0 {
        return Err(Error::Empty("targets"));
    }
    check_len(n, predictions.len())?;
    let mut alphas = Vec::with_capacity(intervals.len());
    let mut miss_rates = Vec::with_capacity(intervals.len());
    for level in intervals {
        check_len(n, level.len())?;
        alphas.push(level[0].alpha);
        let misses = level.iter().zip(targets).filter(|(iv, &y)| !iv.contains(y)).count();
        miss_rates.push(misses as f64 / n as f64);
    }
    let mape = predictions.iter().zip(targets).map(|(p, y)| (y - p).abs()).sum::<f64>() / n as f64;
    let mspe = predictions.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / n as f64;
    Ok(CoverageReport { alphas, miss_rates, mape, mspe, rmspe: libm::sqrt(mspe), n_test: n })
}

/// Bias/variance/covariance split of the ensemble-average error.
///
/// With member errors `e_t(i) = f_t(x_i) - r_i` against the reference `r`
/// (the noiseless `f(x)` when known, else the targets):
/// `bias` is the mean error, `variance` the member-averaged variance of
/// `e_t` over points and `covariance` the pair-averaged covariance between
/// members. With population moments
/// `mspe = bias² + variance / T + (T - 1) / T · covariance`
/// holds exactly, `mspe` being the mean squared error of the member average.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MspeDecomposition {
    pub members: usize,
    pub bias: f64,
    pub variance: f64,
    pub covariance: f64,
    pub mspe: f64,
}

impl MspeDecomposition {
    pub fn bias_squared(&self) -> f64 {
        self.bias * self.bias
    }

    pub fn variance_term(&self) -> f64 {
        self.variance / self.members as f64
    }

    pub fn covariance_term(&self) -> f64 {
        let t = self.members as f64;
        (t - 1.0) / t * self.covariance
    }

    /// `bias² + variance / T + (T - 1) / T · covariance`.
    pub fn recomposed(&self) -> f64 {
        self.bias_squared() + self.variance_term() + self.covariance_term()
    }
}

/// Decompose the error of the average of `member_preds[t][i]`.
pub fn mspe_decomposition(
    member_preds: &[Vec<f64>],
    targets: &[f64],
    true_fn_values: Option<&[f64]>,
) -> Result<MspeDecomposition> {
    let t = member_preds.len();
    if t == 0 {
        return Err(Error::Empty("member predictions"));
    }
    let reference = true_fn_values.unwrap_or(targets);
    let n = reference.len();
    if n == 0 {
        return Err(Error::Empty("targets"));
    }
    check_len(targets.len(), n)?;
    for row in member_preds {
        check_len(n, row.len())?;
    }
    let errors: Vec<Vec<f64>> =
        member_preds.iter().map(|row| row.iter().zip(reference).map(|(f, r)| f - r).collect()).collect();
    let means: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / n as f64).collect();
    let bias = means.iter().sum::<f64>() / t as f64;
    let cov = |a: usize, b: usize| -> f64 {
        errors[a].iter().zip(&errors[b]).map(|(x, y)| (x - means[a]) * (y - means[b])).sum::<f64>() / n as f64
    };
    let variance = (0..t).map(|a| cov(a, a)).sum::<f64>() / t as f64;
    let covariance = if t > 1 {
        let mut total = 0.0;
        for a in 0..t {
            for b in 0..a {
                total += cov(a, b);
            }
        }
        total / (t * (t - 1) / 2) as f64
    } else {
        0.0
    };
    let mspe = (0..n)
        .map(|i| {
            let e = errors.iter().map(|row| row[i]).sum::<f64>() / t as f64;
            e * e
        })
        .sum::<f64>()
        / n as f64;
    Ok(MspeDecomposition { members: t, bias, variance, covariance, mspe })
}
