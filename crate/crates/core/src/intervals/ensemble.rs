use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::Method;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::masks::{sample_mask, sample_mask_with, Mask, MaskMode};
use crate::nn::{forward, predict_all, train, Masking, NetworkSpec, Parameters, TrainConfig};
use crate::rng::{derive, rng_from_seed, Stream};

/// One trained member of an ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Member {
    pub params: Parameters,
    /// Structural mask of an extra-neural-network member.
    pub mask: Option<Mask>,
    pub seed: u64,
    /// How often each original training row was visited during training.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub row_visits: Vec<u32>,
}

impl Member {
    /// Deterministic forward pass; structural masks are applied without scaling.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        forward(&self.params, x, self.mask.as_ref()).map(|f| f.output)
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        predict_all(&self.params, data, self.mask.as_ref())
    }

    /// Number of distinct training rows the member saw.
    pub fn rows_touched(&self) -> usize {
        self.row_visits.iter().filter(|&&v| v > 0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ensemble {
    pub method: Method,
    /// Retention probability of extra-neural-network masks.
    pub p: Option<f64>,
    pub members: Vec<Member>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member average and the individual member predictions at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if self.members.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        let preds: Vec<f64> = self.members.iter().map(|m| m.predict(x)).collect::<Result<_>>()?;
        Ok((crate::stats::mean(&preds), preds))
    }

    /// `out[t][i]`: prediction of member `t` at row `i`.
    pub fn predict_all<E: Executor>(&self, exec: &E, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        exec.map(self.members.len(), |t| self.members[t].predict_all(data)).into_iter().collect()
    }
}

/// Seeds of members `0..t` under `master`.
pub fn member_seeds(master: u64, t: usize) -> Vec<u64> {
    (0..t as u64).map(|k| derive(master, Stream::Member, k)).collect()
}

/// `m` row indices drawn uniformly with replacement, deterministic in `seed`.
pub fn resample_indices(m: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive(seed, Stream::Resample, 0));
    (0..m).map(|_| rng.random_range(0..m)).collect()
}

/// Fraction of `0..m` that appears in `indices`.
pub fn unique_fraction(indices: &[usize], m: usize) -> f64 {
    let mut seen = vec![false; m];
    indices.iter().for_each(|&i| seen[i] = true);
    seen.iter().filter(|&&s| s).count() as f64 / m as f64
}

fn check_members(t: usize) -> Result<()> {
    if t < 2 {
        return Err(invalid(alloc::format!("an ensemble needs at least 2 members, got {t}")));
    }
    Ok(())
}

/// One network trained without masking on `train`, seeded by `config.seed`.
pub fn fit_single(train_set: &Dataset, spec: &NetworkSpec, config: &TrainConfig) -> Result<Parameters> {
    train(spec, train_set, config, &Masking::None).map(|o| o.params)
}

/// Train one bootstrap member on a resample of `train_set`.
pub fn bootstrap_member(train_set: &Dataset, spec: &NetworkSpec, config: &TrainConfig, seed: u64) -> Result<Member> {
    let rows = resample_indices(train_set.len(), seed);
    let sample = train_set.subset(&rows);
    let out = train(spec, &sample, &config.with_seed(seed), &Masking::None)?;
    let mut row_visits = vec![0u32; train_set.len()];
    for (k, &i) in rows.iter().enumerate() {
        row_visits[i] += out.row_visits[k];
    }
    Ok(Member { params: out.params, mask: None, seed, row_visits })
}

/// Naive bootstrap: `t` networks, each on its own resample with replacement.
/// Member seeds derive from `config.seed`.
pub fn bootstrap_fit<E: Executor>(
    exec: &E,
    train_set: &Dataset,
    t: usize,
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<Ensemble> {
    check_members(t)?;
    bootstrap_fit_with_seeds(exec, train_set, spec, config, &member_seeds(config.seed, t))
}

pub fn bootstrap_fit_with_seeds<E: Executor>(
    exec: &E,
    train_set: &Dataset,
    spec: &NetworkSpec,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<Ensemble> {
    let members = exec
        .map(seeds.len(), |k| bootstrap_member(train_set, spec, config, seeds[k]))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(Ensemble { method: Method::BootMean, p: None, members })
}

/// Train one extra-neural-network member: draw a structural mask, then train
/// the thinned network on the full training set.
pub fn extra_nn_member(
    train_set: &Dataset,
    spec: &NetworkSpec,
    config: &TrainConfig,
    p: f64,
    seed: u64,
) -> Result<Member> {
    let mask = sample_mask(spec, p, derive(seed, Stream::Mask, 0), MaskMode::FixedStructural)?;
    let out = train(spec, train_set, &config.with_seed(seed), &Masking::Fixed(mask.clone()))?;
    Ok(Member { params: out.params, mask: Some(mask), seed, row_visits: out.row_visits })
}

/// Extra-neural network: `t` independently initialized sub-networks, each
/// thinned by its own fixed Bernoulli(`p`) mask and trained on all rows.
pub fn extra_nn_fit<E: Executor>(
    exec: &E,
    train_set: &Dataset,
    t: usize,
    p: f64,
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<Ensemble> {
    check_members(t)?;
    let seeds = member_seeds(config.seed, t);
    let members =
        exec.map(t, |k| extra_nn_member(train_set, spec, config, p, seeds[k])).into_iter().collect::<Result<_>>()?;
    Ok(Ensemble { method: Method::ExtraNn, p: Some(p), members })
}

/// One network trained with per-batch dropout at retention `p`.
pub fn mc_dropout_fit(train_set: &Dataset, spec: &NetworkSpec, config: &TrainConfig, p: f64) -> Result<Parameters> {
    train(spec, train_set, config, &Masking::Dropout { p }).map(|o| o.params)
}

/// `t` stochastic forward passes at `x`, each under a fresh test-time mask
/// with inverted scaling.
pub fn mc_dropout_predict(params: &Parameters, x: &[f64], t: usize, p: f64, seed: u64) -> Result<Vec<f64>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(alloc::format!("retention probability must lie in (0, 1], got {p}")));
    }
    let mut rng = rng_from_seed(seed);
    (0..t)
        .map(|_| {
            let mask = sample_mask_with(&mut rng, params.spec(), p, MaskMode::TestStochastic);
            forward(params, x, Some(&mask)).map(|f| f.output)
        })
        .collect()
}

/// MC dropout passes over every row of `data`; `out[t][i]` is pass `t` at row
/// `i`. Row `i` draws its masks from its own stream derived from `seed`.
pub fn mc_dropout_predict_all<E: Executor>(
    exec: &E,
    params: &Parameters,
    data: &Dataset,
    t: usize,
    p: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let per_row: Vec<Vec<f64>> = exec
        .map(data.len(), |i| mc_dropout_predict(params, data.row(i), t, p, derive(seed, Stream::McPasses, i as u64)))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok((0..t).map(|k| per_row.iter().map(|r| r[k]).collect()).collect())
}
