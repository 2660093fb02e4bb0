//! In-memory regression datasets.

use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};

/// Row-major feature matrix with one scalar target per row.
///
/// Simulated datasets also carry the noiseless regression function `f(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    dim: usize,
    noiseless: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, targets: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dataset needs at least one feature column"));
        }
        check_len(targets.len() * dim, features.len())?;
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains NaN or infinite values"));
        }
        Ok(Self { features, targets, dim, noiseless: None })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::Empty("dataset rows"))?;
        check_len(rows.len(), targets.len())?;
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            check_len(dim, row.len())?;
            features.extend_from_slice(row);
        }
        Self::new(features, targets.to_vec(), dim)
    }

    pub fn with_noiseless(mut self, noiseless: Vec<f64>) -> Result<Self> {
        check_len(self.len(), noiseless.len())?;
        self.noiseless = Some(noiseless);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn noiseless(&self) -> Option<&[f64]> {
        self.noiseless.as_deref()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.features.iter().skip(j).step_by(self.dim).copied()
    }

    /// New dataset holding the given rows, in the given order. Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        let noiseless = self.noiseless.as_ref().map(|f| indices.iter().map(|&i| f[i]).collect());
        Dataset { features, targets, dim: self.dim, noiseless }
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }

    pub(crate) fn targets_mut(&mut self) -> &mut [f64] {
        &mut self.targets
    }

    pub(crate) fn noiseless_mut(&mut self) -> Option<&mut [f64]> {
        self.noiseless.as_deref_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rows_and_subsets() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], &[7.0, 8.0, 9.0]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.column(1).collect::<Vec<_>>(), vec![2.0, 4.0, 6.0]);
        let s = d.subset(&[2, 2, 0]);
        assert_eq!(s.targets(), &[9.0, 9.0, 7.0]);
        assert_eq!(s.row(2), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Dataset::new(vec![1.0, f64::NAN], vec![0.0], 2).is_err());
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], vec![0.0], 2).is_err());
        assert!(Dataset::from_rows(&[], &[]).is_err());
    }
}
