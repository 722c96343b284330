use std::f64::consts::PI;
use std::sync::Arc;

use super::{Dataset2D, ScoreModel, ScoreOracle};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::schedule::NoiseSchedule;

/// The empirical measure of a point cloud pushed through the forward SDE:
/// `p_t = (1/n) Σ_i N(r_t x_i, r_t² σ_t² I)`.
///
/// Scores and log-densities are evaluated with a max-shifted log-sum-exp, since
/// `σ_t` can be small enough for the raw exponents to underflow everywhere.
#[derive(Debug, Clone)]
pub struct DiffusedEmpirical {
    dim: usize,
    /// Row-major `n × dim`.
    points: Vec<f64>,
    schedule: NoiseSchedule,
    radius: f64,
}

impl DiffusedEmpirical {
    pub fn new(points: &[Vec<f64>], schedule: NoiseSchedule) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::domain("empirical mixture needs at least one point"))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::domain("points must share a nonzero dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("points must be finite"));
        }
        let radius = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
        Ok(DiffusedEmpirical {
            dim,
            points: points.iter().flatten().copied().collect(),
            schedule,
            radius,
        })
    }

    pub fn from_dataset(data: &Dataset2D, schedule: NoiseSchedule) -> Result<Self> {
        Self::new(&data.points, schedule)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Per-component log-weights `-‖x - r x_i‖² / (2 s²)` and their max.
    fn log_kernels(&self, x: &[f64], r: f64, var: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        let mut max = f64::NEG_INFINITY;
        for p in self.rows() {
            let d2: f64 = x.iter().zip(p).map(|(xi, pi)| (xi - r * pi).powi(2)).sum();
            let l = -0.5 * d2 / var;
            max = max.max(l);
            buf.push(l);
        }
        max
    }
}

impl ScoreModel for DiffusedEmpirical {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let Ok((r, sigma)) = self.schedule.marginal_params(t) else {
            out.fill(f64::NAN);
            return;
        };
        let var = (r * sigma).powi(2);
        if var <= 0.0 {
            out.fill(f64::NAN);
            return;
        }
        // Streaming log-sum-exp: rescale the running sums whenever the max grows.
        let mut max = f64::NEG_INFINITY;
        let mut total = 0.0;
        out.fill(0.0);
        for p in self.rows() {
            let d2: f64 = x.iter().zip(p).map(|(xi, pi)| (xi - r * pi).powi(2)).sum();
            let l = -0.5 * d2 / var;
            let w = if l > max {
                let shrink = (max - l).exp();
                total *= shrink;
                out.iter_mut().for_each(|m| *m *= shrink);
                max = l;
                1.0
            } else {
                (l - max).exp()
            };
            total += w;
            for (m, pi) in out.iter_mut().zip(p) {
                *m += w * pi;
            }
        }
        // Posterior mean of r x_0 under softmax weights.
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (r * *o / total - xi) / var;
        }
    }

    fn log_density(&self, x: &[f64], t: f64) -> Option<f64> {
        let (r, sigma) = self.schedule.marginal_params(t).ok()?;
        let var = (r * sigma).powi(2);
        if var <= 0.0 {
            return None;
        }
        let mut logs = Vec::with_capacity(self.len());
        let max = self.log_kernels(x, r, var, &mut logs);
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        let n = self.len() as f64;
        Some(max + sum.ln() - n.ln() - 0.5 * self.dim as f64 * (2.0 * PI * var).ln())
    }

    fn denoiser_bound(&self) -> Option<f64> {
        Some(self.radius)
    }

    fn tweedie_params(&self, t: f64) -> Option<(f64, f64)> {
        self.schedule.marginal_params(t).ok()
    }
}

/// Oracle for the diffused point cloud; `t` is checked for a nondegenerate mixture.
pub fn diffused_empirical_oracle(
    data: &Dataset2D,
    schedule: NoiseSchedule,
    t: f64,
) -> Result<ScoreOracle> {
    let (_, sigma) = schedule.marginal_params(t)?;
    if sigma <= 0.0 {
        return Err(Error::DegenerateMixture { t });
    }
    Ok(ScoreOracle::new(Arc::new(DiffusedEmpirical::from_dataset(
        data, schedule,
    )?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::testing::{fd_gradient, max_rel_err};
    use crate::targets::{gaussian_oracle, DatasetName};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cloud(points: Vec<Vec<f64>>) -> Dataset2D {
        Dataset2D::new(DatasetName::Checkerboard, points).unwrap()
    }

    fn schedule() -> NoiseSchedule {
        NoiseSchedule::vp_discrete(100, 1e-3, 0.2).unwrap()
    }

    #[test]
    fn single_point_reduces_to_gaussian() {
        let s = schedule();
        let t = 0.4;
        let (r, sigma) = s.marginal_params(t).unwrap();
        let mut mix = diffused_empirical_oracle(&cloud(vec![vec![0.0, 0.0]]), s, t).unwrap();
        let mut g = gaussian_oracle(vec![0.0, 0.0], (r * sigma).powi(2)).unwrap();
        for x in [[0.3, -1.2], [2.0, 0.5], [-0.1, 0.0]] {
            let a = mix.score(&x, t).unwrap();
            let b = g.score(&x, t).unwrap();
            assert!(max_rel_err(&a, &b) < 1e-14);
        }
    }

    #[test]
    fn symmetric_pair_has_zero_score_at_origin() {
        let mut o = diffused_empirical_oracle(
            &cloud(vec![vec![1.5, -0.5], vec![-1.5, 0.5]]),
            schedule(),
            0.3,
        )
        .unwrap();
        let s = o.score(&[0.0, 0.0], 0.3).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn time_zero_is_degenerate() {
        let err = diffused_empirical_oracle(&cloud(vec![vec![1.0, 1.0]]), schedule(), 0.0);
        assert!(matches!(err, Err(Error::DegenerateMixture { .. })));
    }

    #[test]
    fn denoiser_bound_is_max_norm() {
        let m = DiffusedEmpirical::new(&[vec![3.0, 4.0], vec![1.0, 0.0]], schedule()).unwrap();
        assert_relative_eq!(m.denoiser_bound().unwrap(), 5.0);
    }

    #[test]
    fn far_away_score_is_finite() {
        let s = NoiseSchedule::vp_discrete(100, 1e-4, 0.02).unwrap();
        let m =
            DiffusedEmpirical::new(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]], s).unwrap();
        let mut out = [0.0; 2];
        // Smallest nonzero sigma on the grid, far from the cloud.
        m.score_into(&[1e3, -1e3], 0.01, &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
        assert!(m.log_density(&[1e3, -1e3], 0.01).unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn three_point_score_matches_fd(
            x in prop::collection::vec(-2.0f64..2.0, 2),
            t in 0.05f64..1.0,
        ) {
            let pts = vec![vec![0.5, 0.2], vec![-0.7, 0.9], vec![0.1, -1.1]];
            let m = DiffusedEmpirical::new(&pts, NoiseSchedule::vp_continuous(0.1, 20.0).unwrap()).unwrap();
            let mut s = vec![0.0; 2];
            m.score_into(&x, t, &mut s);
            let fd = fd_gradient(&m, &x, t, 1e-5);
            prop_assert!(max_rel_err(&s, &fd) < 1e-5, "{:?} vs {:?}", s, fd);
        }
    }
}
