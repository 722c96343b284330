/// Which rule produced an accept/reject decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionPath {
    /// Plain ULA: every proposal is kept.
    Unadjusted,
    TwoCoin,
    Quadrature,
    /// Metropolis–Hastings with the exact density ratio.
    OracleMh,
    /// Barker with the exact density ratio.
    OracleBarker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    /// Outer two-coin rounds; 1 for single-shot rules.
    pub rounds: u64,
    /// Sum of the Poisson draws over all rounds.
    pub poisson_total: u64,
    pub score_queries: u64,
    /// Last realised `W` (1 when no product was formed).
    pub w_last: f64,
    pub path: DecisionPath,
}

impl Decision {
    pub(crate) fn single(accepted: bool, score_queries: u64, path: DecisionPath) -> Self {
        Decision {
            accepted,
            rounds: 1,
            poisson_total: 0,
            score_queries,
            w_last: 1.0,
            path,
        }
    }
}

/// `1 / (1 + e^{-z})` without overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Barker acceptance `R / (1 + R)` from `log R`.
pub fn barker_probability(log_ratio: f64) -> f64 {
    sigmoid(log_ratio)
}

/// Metropolis acceptance `min(1, R)` from `log R`.
pub fn metropolis_probability(log_ratio: f64) -> f64 {
    log_ratio.min(0.0).exp()
}
