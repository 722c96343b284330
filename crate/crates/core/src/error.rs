use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing capability: {0}")]
    MissingCapability(&'static str),

    #[error("non-finite {what} at coordinate {coordinate}: {value}")]
    NonFinite {
        what: &'static str,
        coordinate: usize,
        value: f64,
    },

    #[error("degenerate mixture at t = {t}: sigma_t is zero")]
    DegenerateMixture { t: f64 },

    #[error("bound C = {c} is invalid: {detail}")]
    BoundInvalid { c: f64, detail: String },

    #[error(
        "two-coin decision did not terminate within {rounds} rounds \
         (C = {c}, log H = {log_h}, poisson draws = {poisson_total}, score queries = {score_queries})"
    )]
    NonTermination {
        rounds: u64,
        poisson_total: u64,
        score_queries: u64,
        c: f64,
        log_h: f64,
    },

    #[error("level {level}, chain {chain}: {source}")]
    Run {
        level: usize,
        chain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than by the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::MissingCapability(_) | Error::Domain(_) => true,
            Error::Run { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Returns the first non-finite coordinate of `v` as an error.
pub(crate) fn check_finite(what: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(coordinate) => Err(Error::NonFinite {
            what,
            coordinate,
            value: v[coordinate],
        }),
    }
}
