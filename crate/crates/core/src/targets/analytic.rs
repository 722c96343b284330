use std::f64::consts::PI;
use std::sync::Arc;

use super::{ScoreModel, ScoreOracle};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm};

/// Isotropic Gaussian `N(mean, variance · I)`, constant in `t`.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain(format!(
                "variance must be > 0, got {variance}"
            )));
        }
        if mean.is_empty() {
            return Err(Error::domain("mean must have at least one coordinate"));
        }
        Ok(GaussianTarget { mean, variance })
    }

    pub fn standard(dim: usize) -> Self {
        GaussianTarget {
            mean: vec![0.0; dim],
            variance: 1.0,
        }
    }
}

impl ScoreModel for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn score_into(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        let inv = 1.0 / self.variance;
        for ((o, xi), mi) in out.iter_mut().zip(x).zip(&self.mean) {
            *o = (mi - xi) * inv;
        }
    }

    fn log_density(&self, x: &[f64], _t: f64) -> Option<f64> {
        let d = self.mean.len() as f64;
        Some(
            -0.5 * dist_sq(x, &self.mean) / self.variance
                - 0.5 * d * (2.0 * PI * self.variance).ln(),
        )
    }

    // Viewed as a point mass at `mean` diffused with r = 1, σ² = variance.
    fn denoiser_bound(&self) -> Option<f64> {
        Some(norm(&self.mean))
    }

    fn tweedie_params(&self, _t: f64) -> Option<(f64, f64)> {
        Some((1.0, self.variance.sqrt()))
    }

    fn lipschitz(&self, _t: f64) -> Option<f64> {
        Some(1.0 / self.variance)
    }
}

pub fn gaussian_oracle(mean: Vec<f64>, variance: f64) -> Result<ScoreOracle> {
    Ok(ScoreOracle::new(Arc::new(GaussianTarget::new(
        mean, variance,
    )?)))
}

/// One-dimensional `log p(x) = -x⁴ / (4 · scale) - perturbation · cos x`.
///
/// The unperturbed form gives a cubic line integrand; the perturbation makes every
/// derivative of the score nonzero.
#[derive(Debug, Clone)]
pub struct QuarticTarget {
    pub scale: f64,
    pub perturbation: f64,
}

impl QuarticTarget {
    pub fn new(scale: f64) -> Result<Self> {
        Self::perturbed(scale, 0.0)
    }

    pub fn perturbed(scale: f64, perturbation: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scale must be > 0, got {scale}")));
        }
        Ok(QuarticTarget {
            scale,
            perturbation,
        })
    }
}

impl ScoreModel for QuarticTarget {
    fn dim(&self) -> usize {
        1
    }

    fn score_into(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        let v = x[0];
        out[0] = -v * v * v / self.scale + self.perturbation * v.sin();
    }

    fn log_density(&self, x: &[f64], _t: f64) -> Option<f64> {
        let v = x[0];
        Some(-(v * v) * (v * v) / (4.0 * self.scale) - self.perturbation * v.cos())
    }
}

pub fn quartic_oracle(scale: f64) -> Result<ScoreOracle> {
    Ok(ScoreOracle::new(Arc::new(QuarticTarget::new(scale)?)))
}
