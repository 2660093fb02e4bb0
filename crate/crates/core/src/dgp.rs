//! Simulation processes and standardization.
//!
//! Both processes draw five independent Gaussian regressors, impose the
//! target correlation matrix `C` by whitening with the Cholesky factor of the
//! empirical correlation and coloring with the Cholesky factor of `C`, then
//! evaluate the regression function and add Gaussian noise.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{cholesky, solve_lower, symmetric_eigen};
use crate::rng::{derive, rng_from_seed, Stream};
use crate::stats::mean_var;

/// The regressor correlation matrix as printed, with its asymmetric `(1,5)`
/// and `(5,1)` entries.
pub const PRINTED_CORRELATION: [[f64; 5]; 5] = [
    [1.0, 0.5, 0.6, 0.7, 0.5],
    [0.5, 1.0, 0.7, 0.8, 0.5],
    [0.6, 0.7, 1.0, 0.7, 0.5],
    [0.7, 0.8, 0.7, 1.0, 0.8],
    [0.9, 0.5, 0.6, 0.8, 1.0],
];

/// Eigenvalue floor used when repairing a matrix that is not positive definite.
pub const EIGEN_FLOOR: f64 = 1e-6;

/// A positive definite correlation matrix to impose on simulated regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTarget {
    matrix: Vec<f64>,
    dim: usize,
    factor: Vec<f64>,
    symmetrized: bool,
    adjusted: bool,
}

impl CorrelationTarget {
    /// Validate a symmetric correlation matrix; no repair is attempted.
    pub fn new(matrix: Vec<f64>, dim: usize) -> Result<Self> {
        check_len(dim * dim, matrix.len())?;
        for i in 0..dim {
            if matrix[i * dim + i] != 1.0 {
                return Err(invalid("correlation matrix needs a unit diagonal"));
            }
            for j in 0..dim {
                let v = matrix[i * dim + j];
                if !(-1.0..=1.0).contains(&v) || v != matrix[j * dim + i] {
                    return Err(invalid("correlation matrix must be symmetric with entries in [-1, 1]"));
                }
            }
        }
        let factor = cholesky(&matrix, dim).ok_or_else(|| not_pd(&matrix, dim))?;
        Ok(Self { matrix, dim, factor, symmetrized: false, adjusted: false })
    }

    /// Mirror the lower triangle of `rows` onto the upper one. If the result
    /// is not positive definite, clip its eigenvalues at [`EIGEN_FLOOR`] and
    /// rescale to a unit diagonal; [`is_adjusted`](Self::is_adjusted) reports it.
    pub fn from_lower_triangle(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = vec![0.0; dim * dim];
        for (i, row) in rows.iter().enumerate() {
            check_len(dim, row.len())?;
            for j in 0..=i {
                m[i * dim + j] = row[j];
                m[j * dim + i] = row[j];
            }
        }
        let symmetrized = rows.iter().enumerate().any(|(i, r)| (0..dim).any(|j| r[j] != rows[j][i]));
        match Self::new(m.clone(), dim) {
            Ok(t) => Ok(Self { symmetrized, ..t }),
            Err(Error::NotPositiveDefinite { .. }) => {
                let repaired = clip_to_correlation(&m, dim);
                let t = Self::new(repaired, dim)?;
                Ok(Self { symmetrized, adjusted: true, ..t })
            }
            Err(e) => Err(e),
        }
    }

    /// The simulation study's matrix, symmetrized from its lower triangle.
    pub fn simulation() -> Self {
        let rows: Vec<Vec<f64>> = PRINTED_CORRELATION.iter().map(|r| r.to_vec()).collect();
        Self::from_lower_triangle(&rows).expect("printed correlation matrix is well formed")
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        (0..dim).for_each(|i| m[i * dim + i] = 1.0);
        Self::new(m, dim).expect("identity is positive definite")
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    /// Lower Cholesky factor `A` with `C = A Aᵀ`.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.factor
    }

    /// Whether the source matrix was asymmetric before mirroring.
    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// Whether eigenvalue clipping changed the matrix.
    pub fn is_adjusted(&self) -> bool {
        self.adjusted
    }
}

fn not_pd(m: &[f64], n: usize) -> Error {
    let (values, _) = symmetric_eigen(m, n);
    Error::NotPositiveDefinite { min_eigenvalue: values[0] }
}

fn clip_to_correlation(m: &[f64], n: usize) -> Vec<f64> {
    let (values, vectors) = symmetric_eigen(m, n);
    let mut out = vec![0.0; n * n];
    for (k, &lambda) in values.iter().enumerate() {
        let lambda = lambda.max(EIGEN_FLOOR);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += lambda * vectors[i * n + k] * vectors[j * n + k];
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| libm::sqrt(out[i * n + i])).collect();
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = if i == j { 1.0 } else { out[i * n + j] / (d[i] * d[j]) };
        }
    }
    for i in 0..n {
        for j in 0..i {
            out[j * n + i] = out[i * n + j];
        }
    }
    out
}

/// Column means and population standard deviations of a row-major matrix.
fn column_moments(x: &[f64], n: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(k);
    let mut stds = Vec::with_capacity(k);
    let mut col = vec![0.0; n];
    for j in 0..k {
        for (i, c) in col.iter_mut().enumerate() {
            *c = x[i * k + j];
        }
        let (m, v) = mean_var(&col);
        means.push(m);
        stds.push(libm::sqrt(v));
    }
    (means, stds)
}

/// Give the columns of the row-major `n × k` matrix `x` the correlation `C`.
///
/// Columns are standardized, whitened with the inverse Cholesky factor of
/// their empirical correlation `Σ`, colored with the Cholesky factor of `C`
/// and mapped back to their original means and standard deviations. The
/// output's empirical correlation equals `C` up to rounding.
pub fn impose_correlation(x: &mut [f64], k: usize, target: &CorrelationTarget) -> Result<()> {
    check_len(k, target.dim())?;
    if k == 0 || x.len() % k != 0 {
        return Err(invalid("matrix length is not a multiple of the column count"));
    }
    let n = x.len() / k;
    if n <= k {
        return Err(invalid(alloc::format!("need more than {k} rows to estimate a {k}×{k} correlation")));
    }
    let (means, stds) = column_moments(x, n, k);
    if let Some(column) = stds.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroVariance { column });
    }
    for row in x.chunks_exact_mut(k) {
        for j in 0..k {
            row[j] = (row[j] - means[j]) / stds[j];
        }
    }
    let mut sigma = vec![0.0; k * k];
    for row in x.chunks_exact(k) {
        for i in 0..k {
            for j in 0..=i {
                sigma[i * k + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            sigma[i * k + j] /= n as f64;
            sigma[j * k + i] = sigma[i * k + j];
        }
    }
    let whitener = cholesky(&sigma, k).ok_or_else(|| not_pd(&sigma, k))?;
    let a = target.cholesky_factor();
    let mut colored = vec![0.0; k];
    for row in x.chunks_exact_mut(k) {
        solve_lower(&whitener, k, row);
        for i in 0..k {
            colored[i] = (0..=i).map(|j| a[i * k + j] * row[j]).sum();
        }
        for j in 0..k {
            row[j] = means[j] + stds[j] * colored[j];
        }
    }
    Ok(())
}

/// Empirical (population) correlation matrix of a row-major `n × k` matrix.
pub fn empirical_correlation(x: &[f64], k: usize) -> Vec<f64> {
    let n = x.len() / k;
    let (means, stds) = column_moments(x, n, k);
    let mut c = vec![0.0; k * k];
    for row in x.chunks_exact(k) {
        for i in 0..k {
            for j in 0..k {
                c[i * k + j] += (row[i] - means[i]) * (row[j] - means[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            c[i * k + j] /= n as f64 * stds[i] * stds[j];
        }
    }
    c
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Noiseless regression function of the nonlinear process: a 5-3-2-1 ReLU
/// network with unit hidden biases.
pub fn nonlinear_truth(x: &[f64]) -> f64 {
    let h11 = relu(1.0 - 3.0 * x[0] - 2.0 * x[1] + x[2] + 5.0 * x[3] - 3.0 * x[4]);
    let h21 = relu(1.0 + 4.0 * x[0] + 5.0 * x[1] + 2.0 * x[2] + 2.0 * x[3] - 5.0 * x[4]);
    let h31 = relu(1.0 - 3.0 * x[0] - 4.0 * x[1] + 2.0 * x[2] - 2.0 * x[3] + 3.0 * x[4]);
    let h12 = relu(1.0 - h11 + 3.0 * h21 + 5.0 * h31);
    let h22 = relu(1.0 - 2.0 * h11 + 3.0 * h21 + 5.0 * h31);
    1.0 + h12 + 2.0 * h22
}

/// Noiseless regression function of the linear process with interactions.
pub fn linear_truth(x: &[f64]) -> f64 {
    -8.0 * x[0] + 2.0 * x[1] + 2.0 * x[2] + 2.0 * x[3] + 7.0 * x[4] + 3.0 * x[0] * x[1] - x[2] * x[4]
        + 2.0 * x[0] * x[3]
}

/// The two simulation processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Dgp {
    Linear,
    Nonlinear,
}

impl Dgp {
    pub const DIM: usize = 5;

    /// Means of the regressors before correlation is imposed; all have unit variance.
    pub fn means(self) -> [f64; 5] {
        match self {
            Dgp::Linear => [-4.0, 1.0, 1.0, 1.0, 5.0],
            Dgp::Nonlinear => [-4.0, 2.0, 2.0, 2.0, 4.0],
        }
    }

    /// Standard deviation of the additive Gaussian noise.
    pub fn noise_sd(self) -> f64 {
        match self {
            Dgp::Linear => 1.0,
            Dgp::Nonlinear => 0.7,
        }
    }

    pub fn truth(self, x: &[f64]) -> f64 {
        match self {
            Dgp::Linear => linear_truth(x),
            Dgp::Nonlinear => nonlinear_truth(x),
        }
    }

    /// Draw `n` observations; the noiseless `f(x)` is kept alongside `y`.
    pub fn generate(self, n: usize, seed: u64) -> Result<Dataset> {
        self.generate_with(n, seed, &CorrelationTarget::simulation())
    }

    pub fn generate_with(self, n: usize, seed: u64, target: &CorrelationTarget) -> Result<Dataset> {
        let k = Self::DIM;
        let means = self.means();
        let mut x_rng = rng_from_seed(derive(seed, Stream::Data, 0));
        let mut x = Vec::with_capacity(n * k);
        for _ in 0..n {
            for m in means {
                let z: f64 = StandardNormal.sample(&mut x_rng);
                x.push(m + z);
            }
        }
        impose_correlation(&mut x, k, target)?;
        let mut e_rng = rng_from_seed(derive(seed, Stream::Noise, 0));
        let sd = self.noise_sd();
        let truth: Vec<f64> = x.chunks_exact(k).map(|row| self.truth(row)).collect();
        let y: Vec<f64> = truth
            .iter()
            .map(|f| {
                let z: f64 = StandardNormal.sample(&mut e_rng);
                f + sd * z
            })
            .collect();
        Dataset::new(x, y, k)?.with_noiseless(truth)
    }
}

pub fn gen_nonlinear(n: usize, seed: u64) -> Result<Dataset> {
    Dgp::Nonlinear.generate(n, seed)
}

pub fn gen_linear(n: usize, seed: u64) -> Result<Dataset> {
    Dgp::Linear.generate(n, seed)
}

/// Split into the first `n_train` rows and the rest. Draws are i.i.d., so a
/// prefix split is a uniform split.
pub fn train_test_split(data: &Dataset, n_train: usize) -> Result<(Dataset, Dataset)> {
    if n_train == 0 || n_train >= data.len() {
        return Err(invalid("train size must leave both parts non-empty"));
    }
    let train: Vec<usize> = (0..n_train).collect();
    let test: Vec<usize> = (n_train..data.len()).collect();
    Ok((data.subset(&train), data.subset(&test)))
}

/// Affine standardization fitted on a training set.
///
/// Features are always standardized with population moments. The target is
/// standardized only when requested; a constant target keeps unit scale.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Standardizer {
    pub fn fit(train: &Dataset, scale_target: bool) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training data"));
        }
        let (feature_means, feature_stds) = column_moments(train.features(), train.len(), train.dim());
        if let Some(column) = feature_stds.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::ZeroVariance { column });
        }
        let (target_mean, target_std) = if scale_target {
            let (m, v) = mean_var(train.targets());
            let s = libm::sqrt(v);
            (m, if s > 0.0 { s } else { 1.0 })
        } else {
            (0.0, 1.0)
        };
        Ok(Self { feature_means, feature_stds, target_mean, target_std })
    }

    pub fn transform_row(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (x[j] - self.feature_means[j]) / self.feature_stds[j];
        }
    }

    pub fn transform_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn invert_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        check_len(self.feature_means.len(), data.dim())?;
        let mut out = data.clone();
        let d = data.dim();
        for (i, row) in out.features_mut().chunks_exact_mut(d).enumerate() {
            self.transform_row(data.row(i), row);
        }
        for y in out.targets_mut() {
            *y = self.transform_target(*y);
        }
        if let Some(f) = out.noiseless_mut() {
            for y in f {
                *y = (*y - self.target_mean) / self.target_std;
            }
        }
        Ok(out)
    }

    /// Undo [`apply`](Self::apply).
    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        check_len(self.feature_means.len(), data.dim())?;
        let mut out = data.clone();
        let d = data.dim();
        for row in out.features_mut().chunks_exact_mut(d) {
            for ((v, s), m) in row.iter_mut().zip(&self.feature_stds).zip(&self.feature_means) {
                *v = *v * s + m;
            }
        }
        for y in out.targets_mut() {
            *y = self.invert_target(*y);
        }
        if let Some(f) = out.noiseless_mut() {
            for y in f {
                *y = self.invert_target(*y);
            }
        }
        Ok(out)
    }
}

/// Fit a [`Standardizer`] on `data` and apply it.
pub fn normalize(data: &Dataset, scale_target: bool) -> Result<(Dataset, Standardizer)> {
    let s = Standardizer::fit(data, scale_target)?;
    Ok((s.apply(data)?, s))
}

#[cfg(test)]
mod tests;
