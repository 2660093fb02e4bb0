//! Bernoulli retention masks over hidden units.
//!
//! A mask holds one bit per hidden unit (never input or output units). The
//! same type serves three purposes, distinguished by [`MaskMode`]:
//!
//! - `PerStep`: drawn afresh for every training batch (dropout training);
//! - `TestStochastic`: drawn afresh for every MC-dropout forward pass;
//! - `FixedStructural`: drawn once before training and kept for the life of
//!   an extra-neural network member, i.e. it *is* the member's architecture.
//!
//! The first two use inverted scaling: retained activations are multiplied
//! by `1/p` so the expected input of the next layer matches the unmasked
//! network. Structural masks are never scaled.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::nn::NetworkSpec;
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MaskMode {
    PerStep,
    TestStochastic,
    FixedStructural,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mask {
    layers: Vec<Vec<bool>>,
    p: f64,
    mode: MaskMode,
}

/// After this many all-zero draws of a structural layer, one unit is kept at random.
const MAX_LAYER_REDRAWS: usize = 10_000;

impl Mask {
    /// All units retained.
    pub fn full(spec: &NetworkSpec, mode: MaskMode) -> Self {
        let layers = spec.hidden_widths().iter().map(|&w| alloc::vec![true; w]).collect();
        Self { layers, p: 1.0, mode }
    }

    pub fn from_layers(layers: Vec<Vec<bool>>, p: f64, mode: MaskMode) -> Result<Self> {
        check_p(p)?;
        if mode == MaskMode::FixedStructural && layers.iter().any(|l| !l.iter().any(|&b| b)) {
            return Err(invalid("a structural mask must keep at least one unit per hidden layer"));
        }
        Ok(Self { layers, p, mode })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn layers(&self) -> &[Vec<bool>] {
        &self.layers
    }

    pub fn layer(&self, n: usize) -> &[bool] {
        &self.layers[n]
    }

    #[inline]
    pub fn is_retained(&self, layer: usize, unit: usize) -> bool {
        self.layers[layer][unit]
    }

    /// Multiplier applied to retained activations.
    #[inline]
    pub fn scale(&self) -> f64 {
        match self.mode {
            MaskMode::FixedStructural => 1.0,
            MaskMode::PerStep | MaskMode::TestStochastic => 1.0 / self.p,
        }
    }

    pub fn retained_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.iter().filter(|&&b| b).count()).collect()
    }

    pub fn fits(&self, spec: &NetworkSpec) -> bool {
        self.layers.len() == spec.hidden_widths().len()
            && self.layers.iter().zip(spec.hidden_widths()).all(|(l, &w)| l.len() == w)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(invalid(alloc::format!("retention probability must lie in (0, 1], got {p}")))
    }
}

/// Draw a mask with i.i.d. Bernoulli(`p`) bits, deterministic in `seed`.
pub fn sample_mask(spec: &NetworkSpec, p: f64, seed: u64, mode: MaskMode) -> Result<Mask> {
    check_p(p)?;
    Ok(sample_mask_with(&mut rng_from_seed(seed), spec, p, mode))
}

/// As [`sample_mask`], drawing from an existing generator. `p` must already be valid.
///
/// Structural masks redraw any hidden layer that came out empty.
pub fn sample_mask_with(rng: &mut Rng, spec: &NetworkSpec, p: f64, mode: MaskMode) -> Mask {
    debug_assert!(p > 0.0 && p <= 1.0);
    let mut layers = Vec::with_capacity(spec.hidden_widths().len());
    for &width in spec.hidden_widths() {
        let mut bits: Vec<bool> = (0..width).map(|_| rng.random::<f64>() < p).collect();
        if mode == MaskMode::FixedStructural {
            let mut attempts = 0;
            while !bits.iter().any(|&b| b) {
                attempts += 1;
                if attempts > MAX_LAYER_REDRAWS {
                    let keep = rng.random_range(0..width);
                    bits[keep] = true;
                    break;
                }
                for b in bits.iter_mut() {
                    *b = rng.random::<f64>() < p;
                }
            }
        }
        layers.push(bits);
    }
    Mask { layers, p, mode }
}

/// Variance of a Bernoulli(`p`) retention bit, `p (1 - p)`.
pub fn bernoulli_variance(p: f64) -> f64 {
    p * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(widths: &[usize]) -> NetworkSpec {
        NetworkSpec::new(3, widths.to_vec()).unwrap()
    }

    #[test]
    fn p_one_keeps_everything() {
        let m = sample_mask(&spec(&[4, 3]), 1.0, 9, MaskMode::PerStep).unwrap();
        assert!(m.layers().iter().flatten().all(|&b| b));
        assert_eq!(m.scale(), 1.0);
    }

    #[test]
    fn invalid_p_rejected() {
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(sample_mask(&spec(&[2]), p, 0, MaskMode::PerStep).is_err());
        }
    }

    #[test]
    fn expected_retained_count() {
        let s = spec(&[10]);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|seed| sample_mask(&s, 0.8, seed, MaskMode::TestStochastic).unwrap().retained_counts()[0])
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 8.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn structural_masks_never_empty_a_layer() {
        let s = spec(&[3, 2]);
        for seed in 0..2_000 {
            let m = sample_mask(&s, 0.05, seed, MaskMode::FixedStructural).unwrap();
            assert!(m.retained_counts().iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn structural_masks_differ_across_seeds() {
        let s = spec(&[10]);
        let n = 2_000;
        let differ = (0..n)
            .filter(|&i| {
                let a = sample_mask(&s, 0.5, 2 * i, MaskMode::FixedStructural).unwrap();
                let b = sample_mask(&s, 0.5, 2 * i + 1, MaskMode::FixedStructural).unwrap();
                a != b
            })
            .count();
        assert!(differ as f64 / n as f64 > 0.99);
    }

    #[test]
    fn per_unit_frequency_chi_square() {
        // χ² over 10 units with 1 degree of freedom each, summed: 10 dof.
        // The 99% quantile of χ²(10) is 23.209.
        let s = spec(&[10]);
        let draws = 10_000u64;
        let p = 0.7;
        let mut counts = [0u64; 10];
        for seed in 0..draws {
            let m = sample_mask(&s, p, seed + 77, MaskMode::PerStep).unwrap();
            for (c, &b) in counts.iter_mut().zip(m.layer(0)) {
                *c += b as u64;
            }
        }
        let n = draws as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let ones = c as f64;
                let zeros = n - ones;
                (ones - n * p).powi(2) / (n * p) + (zeros - n * (1.0 - p)).powi(2) / (n * (1.0 - p))
            })
            .sum();
        assert!(chi2 < 23.209, "chi2 = {chi2}");
    }

    #[test]
    fn bernoulli_variance_values() {
        assert_eq!(bernoulli_variance(0.5), 0.25);
        assert_eq!(bernoulli_variance(0.0), 0.0);
        assert_eq!(bernoulli_variance(1.0), 0.0);
        assert!((bernoulli_variance(0.8) - 0.16).abs() < 1e-15);
    }

    #[test]
    fn structural_mask_validation() {
        assert!(Mask::from_layers(alloc::vec![alloc::vec![false, false]], 0.5, MaskMode::FixedStructural).is_err());
        assert!(Mask::from_layers(alloc::vec![alloc::vec![false, false]], 0.5, MaskMode::PerStep).is_ok());
    }

    proptest! {
        #[test]
        fn bernoulli_variance_symmetric_and_maximal_at_half(p in 0.0f64..=1.0) {
            prop_assert!((bernoulli_variance(p) - bernoulli_variance(1.0 - p)).abs() < 1e-15);
            prop_assert!(bernoulli_variance(0.5) >= bernoulli_variance(p));
        }
    }
}
