//! Score oracles with closed-form ground truth.
//!
//! A [`ScoreModel`] is the read-only description of a family of targets `p_t`; a
//! [`ScoreOracle`] wraps a shared model with a per-chain query counter. Chains fork
//! their own oracle so counting needs no synchronisation; totals are merged after the
//! run.

mod analytic;
mod datasets;
mod mixture;

use std::sync::Arc;

pub use analytic::{gaussian_oracle, quartic_oracle, GaussianTarget, QuarticTarget};
pub use datasets::{
    generate_dataset, in_checkerboard, read_points_csv, write_points_csv, Dataset2D, DatasetName,
};
pub use mixture::{diffused_empirical_oracle, DiffusedEmpirical};

use crate::error::{check_finite, Result};
use crate::linalg::StateVector;

/// Exact score `s(x, t) = ∇ log p_t(x)` plus whatever side information the target can offer.
pub trait ScoreModel: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    fn score_into(&self, x: &[f64], t: f64, out: &mut [f64]);

    /// `log p_t(x)` up to a constant independent of `x`.
    fn log_density(&self, _x: &[f64], _t: f64) -> Option<f64> {
        None
    }

    /// `b` with `‖E[X_0 | X_t = x]‖ ≤ b` for every `x`.
    fn denoiser_bound(&self) -> Option<f64> {
        None
    }

    /// `(r_t, σ_t)` of the Tweedie form `s = (r_t d(x) - x) / (r_t² σ_t²)`.
    fn tweedie_params(&self, _t: f64) -> Option<(f64, f64)> {
        None
    }

    /// One-sided Lipschitz constant of `s(·, t)`.
    fn lipschitz(&self, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct ScoreOracle {
    model: Arc<dyn ScoreModel>,
    queries: u64,
}

impl ScoreOracle {
    pub fn new(model: Arc<dyn ScoreModel>) -> Self {
        ScoreOracle { model, queries: 0 }
    }

    /// Same model, fresh counter.
    pub fn fork(&self) -> Self {
        ScoreOracle::new(Arc::clone(&self.model))
    }

    pub fn model(&self) -> &dyn ScoreModel {
        self.model.as_ref()
    }

    pub fn shared_model(&self) -> Arc<dyn ScoreModel> {
        Arc::clone(&self.model)
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Evaluates the score, counting exactly one query.
    pub fn score(&mut self, x: &[f64], t: f64) -> Result<StateVector> {
        let mut out = vec![0.0; x.len()];
        self.score_into(x, t, &mut out)?;
        Ok(out)
    }

    pub fn score_into(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        self.queries += 1;
        self.model.score_into(x, t, out);
        check_finite("score", out)
    }

    pub fn log_density(&self, x: &[f64], t: f64) -> Option<f64> {
        self.model.log_density(x, t)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Central finite-difference gradient of the model's log-density.
    pub fn fd_gradient(model: &dyn ScoreModel, x: &[f64], t: f64, eps: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += eps;
                lo[i] -= eps;
                (model.log_density(&hi, t).unwrap() - model.log_density(&lo, t).unwrap())
                    / (2.0 * eps)
            })
            .collect()
    }

    pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0, f64::max)
    }
}
