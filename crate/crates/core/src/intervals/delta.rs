use alloc::vec;
use alloc::vec::Vec;

use super::{normal_interval, Method, PredictionInterval};
use crate::data::Dataset;
use crate::error::{check_len, Error, Result};
use crate::linalg::{cholesky, cholesky_with_floor, inverse_quadratic_form, trace};
use crate::nn::{jacobian_into, Parameters, Workspace};

/// Ridge added to `JᵀJ` when it cannot be factorized, relative to its mean
/// diagonal entry: `λ = RIDGE_FACTOR · trace(JᵀJ) / r`.
pub const RIDGE_FACTOR: f64 = 1e-8;

/// Delta-method interval machinery for one trained network.
///
/// Linearizing `f(x; ω)` around `ω̂` gives `Var[f(x; ω̂)] ≈ σ²_e S(x)` with
/// `S(x) = f'ᵀ (JᵀJ)⁻¹ f'`, where `J` stacks the training-set Jacobians and
/// `f' = ∇_ω f(x; ω̂)`. The interval is `f(x; ω̂) ± z σ̂_e √(1 + S(x))`.
///
/// `JᵀJ` of a ReLU network is singular: scaling a hidden unit's incoming
/// weights and bias by `c > 0` and its outgoing weights by `1/c` leaves `f`
/// unchanged, so every unit contributes a null direction. When the plain
/// factorization fails the ridge `RIDGE_FACTOR · trace / r` is added and
/// reported by [`ridge`](Self::ridge).
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMethod {
    params: Parameters,
    factor: Vec<f64>,
    ridge: f64,
    aleatoric_var: f64,
}

impl DeltaMethod {
    /// Accumulate `JᵀJ` and the residual variance `σ̂²_e` over `train`.
    pub fn fit(params: &Parameters, train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training data"));
        }
        check_len(params.spec().input_dim(), train.dim())?;
        let r = params.len();
        let mut jtj = vec![0.0; r * r];
        let mut g = vec![0.0; r];
        let mut ws = Workspace::new(params.spec());
        let mut sse = 0.0;
        for i in 0..train.len() {
            let f = jacobian_into(params, train.row(i), None, &mut ws, &mut g)?;
            let e = train.target(i) - f;
            sse += e * e;
            for a in 0..r {
                let ga = g[a];
                if ga == 0.0 {
                    continue;
                }
                let row = &mut jtj[a * r..a * r + a + 1];
                for (slot, gb) in row.iter_mut().zip(&g[..=a]) {
                    *slot += ga * gb;
                }
            }
        }
        for a in 0..r {
            for b in 0..a {
                jtj[b * r + a] = jtj[a * r + b];
            }
        }
        let (factor, ridge) = match cholesky(&jtj, r) {
            Some(l) => (l, 0.0),
            None => {
                let lambda = RIDGE_FACTOR * trace(&jtj, r) / r as f64;
                for a in 0..r {
                    jtj[a * r + a] += lambda;
                }
                let l = cholesky_with_floor(&jtj, r, 0.0).ok_or(Error::DegenerateJacobian)?;
                (l, lambda)
            }
        };
        if factor.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateJacobian);
        }
        Ok(Self { params: params.clone(), factor, ridge, aleatoric_var: sse / train.len() as f64 })
    }

    /// Replace the training-residual estimate of `σ²_e`.
    pub fn with_aleatoric_variance(mut self, var: f64) -> Self {
        self.aleatoric_var = var;
        self
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    /// Ridge that was added to `JᵀJ`; `0.0` when none was needed.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn aleatoric_var(&self) -> f64 {
        self.aleatoric_var
    }

    /// `gᵀ (JᵀJ)⁻¹ g` for an arbitrary parameter-space vector `g`.
    pub fn quadratic_form(&self, g: &[f64]) -> Result<f64> {
        check_len(self.params.len(), g.len())?;
        Ok(inverse_quadratic_form(&self.factor, g.len(), g))
    }

    /// Prediction and `S(x)` at `x`.
    pub fn leverage(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_len(self.params.spec().input_dim(), x.len())?;
        let mut g = vec![0.0; self.params.len()];
        let mut ws = Workspace::new(self.params.spec());
        let f = jacobian_into(&self.params, x, None, &mut ws, &mut g)?;
        Ok((f, self.quadratic_form(&g)?))
    }

    pub fn interval(&self, x: &[f64], alpha: f64) -> Result<PredictionInterval> {
        let (f, s) = self.leverage(x)?;
        normal_interval(f, self.aleatoric_var * s, self.aleatoric_var, alpha, Method::Delta)
    }
}

/// Fit [`DeltaMethod`] on `train` and evaluate the interval at `x`.
pub fn delta_interval(params: &Parameters, train: &Dataset, x: &[f64], alpha: f64) -> Result<PredictionInterval> {
    DeltaMethod::fit(params, train)?.interval(x, alpha)
}
