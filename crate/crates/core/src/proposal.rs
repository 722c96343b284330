//! Langevin (ULA) proposals and the two quantities every adjustment needs from them:
//! the log proposal ratio `log H` and the line integrand
//! `f(u) = ⟨s(x + u(x̃ - x), t), x̃ - x⟩`, whose integral over `[0, 1]` is `log p_t(x̃) - log p_t(x)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_finite, Error, Result};
use crate::linalg::{along, dot, norm_sq, StateVector};
use crate::targets::ScoreOracle;

/// A proposed move `x → x̃` with both endpoint scores cached.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinProposal {
    pub x: StateVector,
    pub x_prop: StateVector,
    pub h: f64,
    pub t: f64,
    pub score_x: StateVector,
    pub score_prop: StateVector,
    /// `x̃ - x`.
    pub delta: StateVector,
}

impl LangevinProposal {
    /// Assembles a proposal record from known endpoints and scores.
    pub fn new(
        x: StateVector,
        x_prop: StateVector,
        h: f64,
        t: f64,
        score_x: StateVector,
        score_prop: StateVector,
    ) -> Result<Self> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::domain(format!("step size must be > 0, got {h}")));
        }
        let d = x.len();
        if x_prop.len() != d || score_x.len() != d || score_prop.len() != d {
            return Err(Error::domain("proposal vectors disagree in dimension"));
        }
        let delta = crate::linalg::sub(&x_prop, &x);
        Ok(LangevinProposal {
            x,
            x_prop,
            h,
            t,
            score_x,
            score_prop,
            delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// The reverse move `x̃ → x`.
    pub fn reversed(&self) -> Self {
        LangevinProposal {
            x: self.x_prop.clone(),
            x_prop: self.x.clone(),
            h: self.h,
            t: self.t,
            score_x: self.score_prop.clone(),
            score_prop: self.score_x.clone(),
            delta: self.delta.iter().map(|v| -v).collect(),
        }
    }

    /// `f(0) = ⟨s(x), x̃ - x⟩`, free from the cache.
    pub fn integrand_start(&self) -> f64 {
        dot(&self.score_x, &self.delta)
    }

    /// `f(1) = ⟨s(x̃), x̃ - x⟩`, free from the cache.
    pub fn integrand_end(&self) -> f64 {
        dot(&self.score_prop, &self.delta)
    }
}

/// Draws `x̃ = x + (h/2) s(x, t) + √h z` and caches both endpoint scores (two queries).
pub fn ula_propose<R: Rng + ?Sized>(
    x: &[f64],
    oracle: &mut ScoreOracle,
    t: f64,
    h: f64,
    rng: &mut R,
) -> Result<LangevinProposal> {
    let score_x = oracle.score(x, t)?;
    ula_propose_from(x, score_x, oracle, t, h, rng)
}

/// As [`ula_propose`] but reusing an already-known `s(x, t)` (one query).
pub fn ula_propose_from<R: Rng + ?Sized>(
    x: &[f64],
    score_x: StateVector,
    oracle: &mut ScoreOracle,
    t: f64,
    h: f64,
    rng: &mut R,
) -> Result<LangevinProposal> {
    let z: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    ula_propose_with_noise(x, score_x, &z, oracle, t, h)
}

/// Deterministic core of the ULA proposal for a given standard-normal draw `z`.
pub fn ula_propose_with_noise(
    x: &[f64],
    score_x: StateVector,
    z: &[f64],
    oracle: &mut ScoreOracle,
    t: f64,
    h: f64,
) -> Result<LangevinProposal> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::domain(format!("step size must be > 0, got {h}")));
    }
    check_finite("score", &score_x)?;
    let sqrt_h = h.sqrt();
    let x_prop: StateVector = x
        .iter()
        .zip(&score_x)
        .zip(z)
        .map(|((xi, si), zi)| xi + 0.5 * h * si + sqrt_h * zi)
        .collect();
    check_finite("proposal", &x_prop)?;
    let score_prop = oracle.score(&x_prop, t)?;
    LangevinProposal::new(x.to_vec(), x_prop, h, t, score_x, score_prop)
}

/// `log q(x | x̃) - log q(x̃ | x)` for the Gaussian ULA kernel with variance `h`.
pub fn log_h(p: &LangevinProposal) -> f64 {
    let half_h = 0.5 * p.h;
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for ((d, sx), sp) in p.delta.iter().zip(&p.score_x).zip(&p.score_prop) {
        let a = d - half_h * sx;
        let b = -d - half_h * sp;
        fwd += a * a;
        bwd += b * b;
    }
    (fwd - bwd) / (2.0 * p.h)
}

/// `f(u) = ⟨s(x + u(x̃ - x), t), x̃ - x⟩`; endpoints come from the cache without a query.
pub fn line_integrand(p: &LangevinProposal, oracle: &mut ScoreOracle, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("line parameter {u} outside [0, 1]")));
    }
    if u == 0.0 {
        return Ok(p.integrand_start());
    }
    if u == 1.0 {
        return Ok(p.integrand_end());
    }
    if norm_sq(&p.delta) == 0.0 {
        return Ok(0.0);
    }
    let y = along(&p.x, &p.delta, u);
    let s = oracle.score(&y, p.t)?;
    Ok(dot(&s, &p.delta))
}
