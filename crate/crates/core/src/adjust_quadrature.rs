//! Metropolis correction on a Newton–Cotes estimate of the log density ratio, plus the
//! hybrid rule that tries a few exact two-coin rounds before falling back to it.

use rand::Rng;

use crate::adjust_exact::two_coin_rounds;
use crate::decision::{barker_probability, Decision, DecisionPath};
use crate::error::{Error, Result};
use crate::proposal::{line_integrand, log_h, LangevinProposal};
use crate::targets::ScoreOracle;

pub const DEFAULT_HYBRID_ROUNDS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseRule {
    Trapezoid,
    Simpson13,
    Simpson38,
}

impl BaseRule {
    fn intervals(self) -> usize {
        match self {
            BaseRule::Trapezoid => 1,
            BaseRule::Simpson13 => 2,
            BaseRule::Simpson38 => 3,
        }
    }

    /// Weights on `[0, 1]` over `intervals() + 1` equally spaced nodes.
    fn weights(self) -> &'static [f64] {
        match self {
            BaseRule::Trapezoid => &[0.5, 0.5],
            BaseRule::Simpson13 => &[1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
            BaseRule::Simpson38 => &[1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaseRule::Trapezoid => "trapezoid",
            BaseRule::Simpson13 => "simpson13",
            BaseRule::Simpson38 => "simpson38",
        }
    }
}

/// A closed Newton–Cotes rule on `[0, 1]`, optionally repeated over `panels` equal panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadratureRule {
    pub base: BaseRule,
    pub panels: usize,
}

impl QuadratureRule {
    pub const TRAPEZOID: QuadratureRule = QuadratureRule::single(BaseRule::Trapezoid);
    pub const SIMPSON13: QuadratureRule = QuadratureRule::single(BaseRule::Simpson13);
    pub const SIMPSON38: QuadratureRule = QuadratureRule::single(BaseRule::Simpson38);

    pub const fn single(base: BaseRule) -> Self {
        QuadratureRule { base, panels: 1 }
    }

    /// High-resolution reference rule; not meant for use inside a sampler.
    pub fn composite(base: BaseRule, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::config("composite rule needs at least one panel"));
        }
        Ok(QuadratureRule { base, panels })
    }

    pub fn name(&self) -> String {
        if self.panels == 1 {
            self.base.as_str().to_string()
        } else {
            format!("composite({}, {})", self.base.as_str(), self.panels)
        }
    }

    pub fn intervals(&self) -> usize {
        self.base.intervals() * self.panels
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.intervals();
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let k = self.base.intervals();
        let mut w = vec![0.0; self.intervals() + 1];
        let scale = 1.0 / self.panels as f64;
        for panel in 0..self.panels {
            for (j, bw) in self.base.weights().iter().enumerate() {
                w[panel * k + j] += bw * scale;
            }
        }
        w
    }

    /// Score queries beyond the two cached endpoints.
    pub fn extra_queries(&self) -> usize {
        self.intervals() - 1
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(Self::TRAPEZOID),
            "simpson13" => Ok(Self::SIMPSON13),
            "simpson38" => Ok(Self::SIMPSON38),
            _ => Err(Error::config(format!(
                "unknown quadrature rule {s:?} (expected trapezoid, simpson13 or simpson38)"
            ))),
        }
    }
}

impl std::fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// `Σ_i w_i f(i/N)`, an estimate of `log p_t(x̃) - log p_t(x)`.
pub fn quadrature_log_ratio(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    rule: &QuadratureRule,
) -> Result<f64> {
    let n = rule.intervals();
    let weights = rule.weights();
    let mut sum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        // Exact endpoints so the cache is hit.
        let u = if i == n { 1.0 } else { i as f64 / n as f64 };
        sum += w * line_integrand(p, oracle, u)?;
    }
    Ok(sum)
}

fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> Result<bool> {
    if log_ratio.is_nan() {
        return Err(Error::NonFinite {
            what: "log acceptance ratio",
            coordinate: 0,
            value: log_ratio,
        });
    }
    Ok(rng.random::<f64>().ln() <= log_ratio.min(0.0))
}

/// Metropolis test on `Î + log H`, all in log space.
pub fn mh_decision_quadrature<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    rule: &QuadratureRule,
    rng: &mut R,
) -> Result<Decision> {
    let start = oracle.queries();
    let estimate = quadrature_log_ratio(p, oracle, rule)?;
    if !estimate.is_finite() {
        return Err(Error::NonFinite {
            what: "quadrature log ratio",
            coordinate: 0,
            value: estimate,
        });
    }
    let accepted = metropolis_accept(estimate + log_h(p), rng)?;
    Ok(Decision::single(
        accepted,
        oracle.queries() - start,
        DecisionPath::Quadrature,
    ))
}

fn exact_log_ratio(p: &LangevinProposal, oracle: &ScoreOracle) -> Result<f64> {
    let missing = Error::MissingCapability("log density");
    let from = oracle.log_density(&p.x, p.t).ok_or(missing)?;
    let to = oracle
        .log_density(&p.x_prop, p.t)
        .ok_or(Error::MissingCapability("log density"))?;
    Ok(to - from)
}

/// MALA with the target's exact log density; a baseline, not a score-only method.
pub fn oracle_mh_decision<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &ScoreOracle,
    rng: &mut R,
) -> Result<Decision> {
    let log_r = exact_log_ratio(p, oracle)?;
    let accepted = metropolis_accept(log_r + log_h(p), rng)?;
    Ok(Decision::single(accepted, 0, DecisionPath::OracleMh))
}

/// Barker acceptance with the exact log density.
pub fn oracle_barker_decision<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &ScoreOracle,
    rng: &mut R,
) -> Result<Decision> {
    let log_r = exact_log_ratio(p, oracle)?;
    let accepted = rng.random::<f64>() < barker_probability(log_r + log_h(p));
    Ok(Decision::single(accepted, 0, DecisionPath::OracleBarker))
}

/// Up to `max_rounds` exact two-coin rounds, then a quadrature Metropolis test.
pub fn hybrid_decision<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    c: f64,
    rule: &QuadratureRule,
    max_rounds: u64,
    rng: &mut R,
) -> Result<Decision> {
    if max_rounds == 0 {
        return mh_decision_quadrature(p, oracle, rule, rng);
    }
    let (outcome, exact) = two_coin_rounds(p, oracle, c, rng, max_rounds)?;
    if outcome.is_some() {
        return Ok(exact);
    }
    let fallback = mh_decision_quadrature(p, oracle, rule, rng)?;
    Ok(Decision {
        accepted: fallback.accepted,
        rounds: exact.rounds,
        poisson_total: exact.poisson_total,
        score_queries: exact.score_queries + fallback.score_queries,
        w_last: exact.w_last,
        path: DecisionPath::Quadrature,
    })
}
