//! Forward-SDE noise schedules `dX = f_t X dt + g_t dB` on `t ∈ [0, 1]`.
//!
//! Every schedule exposes the closed-form marginal parameters `(r_t, σ_t)` of the
//! Gaussian transition `p_{t|0}(x_t | x_0) = N(r_t x_0, r_t² σ_t² I)`, where
//! `r_t = exp(∫ f)` and `σ_t² = ∫ (g/r)²`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    VpDiscrete,
    VpContinuous,
    Edm,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vp-discrete" => Ok(ScheduleKind::VpDiscrete),
            "vp-continuous" => Ok(ScheduleKind::VpContinuous),
            "edm" => Ok(ScheduleKind::Edm),
            other => Err(Error::config(format!(
                "unknown schedule kind {other:?} (expected vp-discrete, vp-continuous or edm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSchedule {
    /// DDPM chain with `T` steps; level `k` sits at `t = k / T`.
    VpDiscrete {
        betas: Vec<f64>,
        /// `log ᾱ_k = Σ_{j≤k} log(1 - β_j)`, length `T + 1`.
        log_alpha_bar: Vec<f64>,
    },
    /// `β(t) = β_min + t (β_max - β_min)`, `f = -β/2`, `g = √β`.
    VpContinuous { beta_min: f64, beta_max: f64 },
    /// `σ(t) = t`, `r_t = 1`.
    Edm,
}

/// Linearly interpolated DDPM betas: `β_1 = β_min`, `β_T = β_max`.
pub fn beta_schedule(steps: usize, beta_min: f64, beta_max: f64) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::domain("beta schedule needs T >= 1"));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::domain(format!(
            "beta schedule needs 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})"
        )));
    }
    if steps == 1 {
        return Ok(vec![beta_min]);
    }
    let span = beta_max - beta_min;
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| beta_min + span * (k as f64 / last))
        .collect())
}

impl NoiseSchedule {
    pub fn vp_discrete(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        Self::from_betas(beta_schedule(steps, beta_min, beta_max)?)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::domain("empty beta sequence"));
        }
        if betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::domain("every beta must lie in (0, 1)"));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("beta sequence must be nondecreasing"));
        }
        let mut log_alpha_bar = Vec::with_capacity(betas.len() + 1);
        let mut acc = 0.0;
        log_alpha_bar.push(acc);
        for &b in &betas {
            acc += (-b).ln_1p();
            log_alpha_bar.push(acc);
        }
        Ok(NoiseSchedule::VpDiscrete {
            betas,
            log_alpha_bar,
        })
    }

    pub fn vp_continuous(beta_min: f64, beta_max: f64) -> Result<Self> {
        if !(beta_min > 0.0 && beta_min <= beta_max && beta_max.is_finite()) {
            return Err(Error::domain(format!(
                "continuous VP needs 0 < beta_min <= beta_max, got ({beta_min}, {beta_max})"
            )));
        }
        Ok(NoiseSchedule::VpContinuous { beta_min, beta_max })
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            NoiseSchedule::VpDiscrete { .. } => ScheduleKind::VpDiscrete,
            NoiseSchedule::VpContinuous { .. } => ScheduleKind::VpContinuous,
            NoiseSchedule::Edm => ScheduleKind::Edm,
        }
    }

    /// Number of discrete levels, if the schedule is a DDPM chain.
    pub fn discrete_steps(&self) -> Option<usize> {
        match self {
            NoiseSchedule::VpDiscrete { betas, .. } => Some(betas.len()),
            _ => None,
        }
    }

    /// `log r_t`.
    pub fn log_scale(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            NoiseSchedule::VpDiscrete { log_alpha_bar, .. } => 0.5 * interpolate(log_alpha_bar, t),
            NoiseSchedule::VpContinuous { beta_min, beta_max } => {
                -0.5 * integrated_beta(*beta_min, *beta_max, t)
            }
            NoiseSchedule::Edm => 0.0,
        })
    }

    /// Closed-form `(r_t, σ_t)`.
    pub fn marginal_params(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        Ok(match self {
            NoiseSchedule::VpDiscrete { log_alpha_bar, .. } => {
                let la = interpolate(log_alpha_bar, t);
                ((0.5 * la).exp(), (-la).exp_m1().max(0.0).sqrt())
            }
            NoiseSchedule::VpContinuous { beta_min, beta_max } => {
                let b = integrated_beta(*beta_min, *beta_max, t);
                ((-0.5 * b).exp(), b.exp_m1().sqrt())
            }
            NoiseSchedule::Edm => (1.0, t),
        })
    }

    /// Drift coefficient `f_t`.
    pub fn drift(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            NoiseSchedule::VpDiscrete { betas, .. } => {
                let steps = betas.len();
                let k = segment(steps, t);
                0.5 * steps as f64 * (-betas[k]).ln_1p()
            }
            NoiseSchedule::VpContinuous { beta_min, beta_max } => {
                -0.5 * (beta_min + t * (beta_max - beta_min))
            }
            NoiseSchedule::Edm => 0.0,
        })
    }

    /// Diffusion coefficient `g_t`.
    pub fn diffusion(&self, t: f64) -> Result<f64> {
        Ok(match self {
            // Unit-variance preserving: g² = -2 f.
            NoiseSchedule::VpDiscrete { .. } | NoiseSchedule::VpContinuous { .. } => {
                (-2.0 * self.drift(t)?).sqrt()
            }
            NoiseSchedule::Edm => {
                check_time(t)?;
                (2.0 * t).sqrt()
            }
        })
    }

    /// Effective one-step beta between two times, `1 - (r_hi / r_lo)²`.
    ///
    /// On a DDPM grid with `t_lo = k / T`, `t_hi = (k+1) / T` this is exactly `β_{k+1}`.
    pub fn transition_beta(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        if t_hi < t_lo {
            return Err(Error::domain(format!(
                "transition_beta needs t_lo <= t_hi, got ({t_lo}, {t_hi})"
            )));
        }
        let d = self.log_scale(t_hi)? - self.log_scale(t_lo)?;
        Ok(-(2.0 * d).exp_m1())
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("time {t} outside [0, 1]")))
    }
}

fn integrated_beta(beta_min: f64, beta_max: f64, t: f64) -> f64 {
    beta_min * t + 0.5 * (beta_max - beta_min) * t * t
}

/// Index of the beta segment containing `t` (left-open intervals, `t = 0` maps to the first).
fn segment(steps: usize, t: f64) -> usize {
    let s = t * steps as f64;
    (s.ceil() as usize).clamp(1, steps) - 1
}

/// Piecewise-linear interpolation of a grid sampled at `k / (len - 1)`.
fn interpolate(grid: &[f64], t: f64) -> f64 {
    let steps = grid.len() - 1;
    let s = t * steps as f64;
    let k = (s.floor() as usize).min(steps - 1);
    let frac = s - k as f64;
    if frac == 0.0 {
        grid[k]
    } else {
        grid[k] + frac * (grid[k + 1] - grid[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_at_time_zero() {
        for s in [
            NoiseSchedule::vp_discrete(1000, 1e-4, 0.02).unwrap(),
            NoiseSchedule::vp_continuous(0.1, 20.0).unwrap(),
            NoiseSchedule::Edm,
        ] {
            assert_eq!(s.marginal_params(0.0).unwrap(), (1.0, 0.0));
        }
    }

    #[test]
    fn edm_is_sigma_equals_t() {
        assert_eq!(NoiseSchedule::Edm.marginal_params(0.7).unwrap(), (1.0, 0.7));
    }

    #[test]
    fn vp_discrete_terminal_matches_direct_product() {
        let betas = beta_schedule(1000, 1e-4, 0.02).unwrap();
        let s = NoiseSchedule::from_betas(betas.clone()).unwrap();
        // Oracle: plain running product of sqrt(1 - beta).
        let r_direct: f64 = betas.iter().map(|b| (1.0 - b).sqrt()).product();
        let var_direct = 1.0 - r_direct * r_direct;
        let (r, sigma) = s.marginal_params(1.0).unwrap();
        assert_relative_eq!(r, r_direct, max_relative = 1e-10);
        assert_relative_eq!((r * sigma).powi(2), var_direct, max_relative = 1e-10);
        assert!(r < 0.01);
        assert_relative_eq!(r * sigma, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn one_step_variances_compose() {
        let s = NoiseSchedule::vp_discrete(1000, 1e-4, 0.02).unwrap();
        let NoiseSchedule::VpDiscrete { betas, .. } = &s else {
            unreachable!()
        };
        let mut v = 0.0;
        for (k, b) in betas.iter().enumerate() {
            v = (1.0 - b) * v + b;
            let (r, sigma) = s.marginal_params((k + 1) as f64 / 1000.0).unwrap();
            let closed = (r * sigma).powi(2);
            assert!(
                ((v - closed) / closed).abs() < 1e-10,
                "k={k}: {v} vs {closed}"
            );
        }
    }

    #[test]
    fn beta_schedule_examples() {
        assert_eq!(beta_schedule(1, 0.1, 0.1).unwrap(), vec![0.1]);
        let b = beta_schedule(3, 0.1, 0.3).unwrap();
        for (x, y) in b.iter().zip([0.1, 0.2, 0.3]) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
        let b = beta_schedule(1000, 1e-4, 0.02).unwrap();
        assert_eq!(b.len(), 1000);
        assert_eq!(b[0], 1e-4);
        assert_relative_eq!(b[999], 0.02, epsilon = 1e-15);
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        // Midpoint of the index range, between beta_500 and beta_501.
        assert_relative_eq!(0.5 * (b[499] + b[500]), 0.01005, epsilon = 1e-12);
    }

    #[test]
    fn beta_schedule_rejects_bad_bounds() {
        assert!(beta_schedule(0, 0.1, 0.2).is_err());
        assert!(beta_schedule(10, 0.0, 0.2).is_err());
        assert!(beta_schedule(10, 0.3, 0.2).is_err());
        assert!(beta_schedule(10, 0.1, 1.0).is_err());
    }

    #[test]
    fn out_of_range_time_is_domain_error() {
        let s = NoiseSchedule::Edm;
        assert!(matches!(s.marginal_params(1.5), Err(Error::Domain(_))));
        assert!(matches!(s.marginal_params(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn vp_marginals_are_monotone() {
        for s in [
            NoiseSchedule::vp_discrete(37, 1e-3, 0.3).unwrap(),
            NoiseSchedule::vp_continuous(0.1, 20.0).unwrap(),
        ] {
            let mut prev = s.marginal_params(0.0).unwrap();
            for i in 1..=500 {
                let cur = s.marginal_params(i as f64 / 500.0).unwrap();
                assert!(cur.0 <= prev.0 && cur.1 >= prev.1);
                assert!(cur.0 > 0.0);
                prev = cur;
            }
        }
    }

    #[test]
    fn transition_beta_recovers_ddpm_betas() {
        let s = NoiseSchedule::vp_discrete(40, 0.0025, 0.5).unwrap();
        let NoiseSchedule::VpDiscrete { betas, .. } = &s else {
            unreachable!()
        };
        for (k, &beta) in betas.iter().enumerate() {
            let b = s
                .transition_beta(k as f64 / 40.0, (k + 1) as f64 / 40.0)
                .unwrap();
            assert_relative_eq!(b, beta, max_relative = 1e-12);
        }
    }

    #[test]
    fn drift_and_diffusion_reproduce_marginal_variance() {
        // d/dt (r² σ²) = 2 f r² σ² + g² for unit-variance data; check by finite differences.
        for s in [
            NoiseSchedule::vp_continuous(0.1, 20.0).unwrap(),
            NoiseSchedule::vp_discrete(50, 1e-3, 0.2).unwrap(),
            NoiseSchedule::Edm,
        ] {
            for &t in &[0.13, 0.51, 0.87] {
                let var = |t: f64| {
                    let (r, sg) = s.marginal_params(t).unwrap();
                    (r * sg).powi(2)
                };
                let eps = 1e-6;
                let dv = (var(t + eps) - var(t - eps)) / (2.0 * eps);
                let f = s.drift(t).unwrap();
                let g = s.diffusion(t).unwrap();
                let rhs = 2.0 * f * var(t) + g * g;
                assert_relative_eq!(dv, rhs, max_relative = 1e-5);
            }
        }
    }
}
