//! Exact Barker adjustment through a two-coin Bernoulli factory.
//!
//! The factory needs an envelope `C ≥ sup_u |f(u)|` on the line integrand. Given that,
//! `W = Π_{j≤N} (1/2 + f(U_j) / (2C))` with `N ~ Poisson(2C)` is a `[0, 1]`-valued
//! unbiased estimator of `e^{-C} r`, which is all the two-coin loop consumes.

use rand::Rng;

use crate::decision::{sigmoid, Decision, DecisionPath};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::poisson::sample_poisson;
use crate::proposal::{line_integrand, log_h, LangevinProposal};
use crate::targets::{ScoreModel, ScoreOracle};

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

const FACTOR_TOLERANCE: f64 = 1e-9;

/// How to obtain the envelope `C(x, x̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundSpec {
    /// `‖E[X_0 | X_t]‖ ≤ b`; requires the Tweedie form of the score.
    BoundedDenoiser {
        b: f64,
    },
    /// One-sided Lipschitz constant of the score.
    Lipschitz {
        l: f64,
    },
    Manual {
        c: f64,
    },
}

/// Which envelope to use, with constants resolved from the model at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStrategy {
    BoundedDenoiser,
    Lipschitz,
    Manual(f64),
}

impl std::str::FromStr for BoundStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded-denoiser" => Ok(BoundStrategy::BoundedDenoiser),
            "lipschitz" => Ok(BoundStrategy::Lipschitz),
            other => match other.strip_prefix("manual:").map(str::parse::<f64>) {
                Some(Ok(c)) => Ok(BoundStrategy::Manual(c)),
                _ => Err(Error::config(format!(
                    "unknown bound {s:?} (expected bounded-denoiser, lipschitz or manual:<C>)"
                ))),
            },
        }
    }
}

impl BoundStrategy {
    pub fn resolve(self, model: &dyn ScoreModel, t: f64) -> Result<BoundSpec> {
        let spec = match self {
            BoundStrategy::BoundedDenoiser => BoundSpec::BoundedDenoiser {
                b: model
                    .denoiser_bound()
                    .ok_or(Error::MissingCapability("denoiser bound"))?,
            },
            BoundStrategy::Lipschitz => BoundSpec::Lipschitz {
                l: model
                    .lipschitz(t)
                    .ok_or(Error::MissingCapability("score Lipschitz constant"))?,
            },
            BoundStrategy::Manual(c) => BoundSpec::Manual { c },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl BoundSpec {
    pub fn value(&self) -> f64 {
        match *self {
            BoundSpec::BoundedDenoiser { b } => b,
            BoundSpec::Lipschitz { l } => l,
            BoundSpec::Manual { c } => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.value();
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "bound constant must be finite and >= 0, got {v}"
            )))
        }
    }
}

/// Envelope `C` for the proposal, checked against the cached endpoint integrands.
pub fn bound_c(p: &LangevinProposal, spec: &BoundSpec, model: &dyn ScoreModel) -> Result<f64> {
    spec.validate()?;
    let step = norm(&p.delta);
    let c = match *spec {
        BoundSpec::BoundedDenoiser { b } => {
            let (r, sigma) = model
                .tweedie_params(p.t)
                .ok_or(Error::MissingCapability("Tweedie parameters"))?;
            let var = (r * sigma).powi(2);
            if step == 0.0 {
                0.0
            } else if var <= 0.0 {
                return Err(Error::DegenerateMixture { t: p.t });
            } else {
                (b * r + norm(&p.x).max(norm(&p.x_prop))) / var * step
            }
        }
        BoundSpec::Lipschitz { l } => {
            norm(&p.score_x).max(norm(&p.score_prop)) * step + 0.5 * l * step * step
        }
        BoundSpec::Manual { c } => c,
    };
    check_endpoints(p, c)?;
    Ok(c)
}

fn check_endpoints(p: &LangevinProposal, c: f64) -> Result<()> {
    let worst = p.integrand_start().abs().max(p.integrand_end().abs());
    if worst > c + FACTOR_TOLERANCE * c.max(1.0) {
        return Err(Error::BoundInvalid {
            c,
            detail: format!("endpoint integrand magnitude {worst} exceeds the bound"),
        });
    }
    Ok(())
}

/// One realisation of `W` with its Poisson count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonProduct {
    pub w: f64,
    pub n: u64,
}

pub fn poisson_product_w<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    c: f64,
    rng: &mut R,
) -> Result<PoissonProduct> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::BoundInvalid {
            c,
            detail: "bound must be finite and nonnegative".into(),
        });
    }
    let n = sample_poisson(2.0 * c, rng);
    let mut w = 1.0;
    for _ in 0..n {
        let u: f64 = rng.random();
        let f = line_integrand(p, oracle, u)?;
        let factor = 0.5 + f / (2.0 * c);
        if !(-FACTOR_TOLERANCE..=1.0 + FACTOR_TOLERANCE).contains(&factor) {
            return Err(Error::BoundInvalid {
                c,
                detail: format!("integrand {f} at u = {u} leaves the envelope"),
            });
        }
        w *= factor.clamp(0.0, 1.0);
    }
    Ok(PoissonProduct { w, n })
}

/// Probability of an immediate reject, `1 / (1 + H e^C)`, from `log H`.
pub fn immediate_reject_probability(log_h: f64, c: f64) -> f64 {
    sigmoid(-(log_h + c))
}

/// Runs at most `max_rounds` two-coin rounds; `Ok(None)` if still undecided.
pub(crate) fn two_coin_rounds<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    c: f64,
    rng: &mut R,
    max_rounds: u64,
) -> Result<(Option<bool>, Decision)> {
    let reject_prob = immediate_reject_probability(log_h(p), c);
    let start = oracle.queries();
    let mut d = Decision {
        accepted: false,
        rounds: 0,
        poisson_total: 0,
        score_queries: 0,
        w_last: 1.0,
        path: DecisionPath::TwoCoin,
    };
    let mut outcome = None;
    while d.rounds < max_rounds {
        d.rounds += 1;
        if rng.random::<f64>() < reject_prob {
            outcome = Some(false);
            break;
        }
        let pw = poisson_product_w(p, oracle, c, rng)?;
        d.poisson_total += pw.n;
        d.w_last = pw.w;
        if rng.random::<f64>() <= pw.w {
            outcome = Some(true);
            break;
        }
    }
    d.score_queries = oracle.queries() - start;
    d.accepted = outcome.unwrap_or(false);
    Ok((outcome, d))
}

/// Exact Barker accept/reject: accepts with probability `H r / (1 + H r)`.
pub fn two_coin_decision<R: Rng + ?Sized>(
    p: &LangevinProposal,
    oracle: &mut ScoreOracle,
    c: f64,
    rng: &mut R,
    max_rounds: u64,
) -> Result<Decision> {
    if max_rounds == 0 {
        return Err(Error::config("max_rounds must be >= 1"));
    }
    match two_coin_rounds(p, oracle, c, rng, max_rounds)? {
        (Some(_), d) => Ok(d),
        (None, d) => Err(Error::NonTermination {
            rounds: d.rounds,
            poisson_total: d.poisson_total,
            score_queries: d.score_queries,
            c,
            log_h: log_h(p),
        }),
    }
}

/// Mean score queries of one two-coin decision, `2 C H e^C / (1 + H r)`.
pub fn expected_queries(c: f64, h: f64, r: f64) -> f64 {
    2.0 * c * h * c.exp() / (1.0 + h * r)
}

/// Mean number of rounds, `(1 + H e^C) / (1 + H r)`.
pub fn expected_rounds(c: f64, h: f64, r: f64) -> f64 {
    (1.0 + h * c.exp()) / (1.0 + h * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::barker_probability;
    use crate::targets::{gaussian_oracle, GaussianTarget};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_pair(x: f64, xp: f64, h: f64) -> (LangevinProposal, ScoreOracle) {
        let o = gaussian_oracle(vec![0.0], 1.0).unwrap();
        let p = LangevinProposal::new(vec![x], vec![xp], h, 0.0, vec![-x], vec![-xp]).unwrap();
        (p, o)
    }

    fn within(mean: f64, target: f64, se: f64, k: f64) -> bool {
        (mean - target).abs() <= k * se
    }

    #[test]
    fn bound_examples() {
        let (p, o) = gaussian_pair(0.0, 1.0, 0.5);
        let lip = bound_c(&p, &BoundSpec::Lipschitz { l: 1.0 }, o.model()).unwrap();
        assert_relative_eq!(lip, 1.5, epsilon = 1e-15);

        let (p, o) = gaussian_pair(0.7, 0.7, 0.5);
        assert_eq!(
            bound_c(&p, &BoundSpec::Lipschitz { l: 1.0 }, o.model()).unwrap(),
            0.0
        );
        assert_eq!(
            bound_c(&p, &BoundSpec::BoundedDenoiser { b: 0.0 }, o.model()).unwrap(),
            0.0
        );

        // Standard normal is a point mass at the origin diffused to r = 1, sigma = 1.
        let (p, o) = gaussian_pair(0.0, 1.0, 0.5);
        let bd = bound_c(&p, &BoundSpec::BoundedDenoiser { b: 0.0 }, o.model()).unwrap();
        assert_relative_eq!(bd, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bound_rejects_violations_and_missing_capabilities() {
        let (p, o) = gaussian_pair(0.0, 2.0, 0.5);
        // |f(1)| = 4 > 1.
        let err = bound_c(&p, &BoundSpec::Manual { c: 1.0 }, o.model()).unwrap_err();
        assert!(matches!(err, Error::BoundInvalid { .. }));
        assert!(bound_c(&p, &BoundSpec::Manual { c: -1.0 }, o.model()).is_err());

        let q = crate::targets::quartic_oracle(1.0).unwrap();
        assert!(matches!(
            BoundStrategy::BoundedDenoiser.resolve(q.model(), 0.0),
            Err(Error::MissingCapability(_))
        ));
        let g = GaussianTarget::standard(1);
        assert_eq!(
            BoundStrategy::Lipschitz.resolve(&g, 0.0).unwrap(),
            BoundSpec::Lipschitz { l: 1.0 }
        );
    }

    #[test]
    fn strategy_parses() {
        assert_eq!(
            "lipschitz".parse::<BoundStrategy>().unwrap(),
            BoundStrategy::Lipschitz
        );
        assert_eq!(
            "manual:2.5".parse::<BoundStrategy>().unwrap(),
            BoundStrategy::Manual(2.5)
        );
        assert!("tight".parse::<BoundStrategy>().is_err());
    }

    #[test]
    fn zero_bound_gives_unit_product() {
        let (p, mut o) = gaussian_pair(0.0, 1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let pw = poisson_product_w(&p, &mut o, 0.0, &mut rng).unwrap();
            assert_eq!((pw.w, pw.n), (1.0, 0));
        }
        assert_eq!(o.queries(), 0);
    }

    #[test]
    fn stationary_proposal_halves_each_factor() {
        let (p, mut o) = gaussian_pair(0.3, 0.3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let pw = poisson_product_w(&p, &mut o, 2.0, &mut rng).unwrap();
            assert_eq!(pw.w, 0.5f64.powi(pw.n as i32));
        }
    }

    #[test]
    fn product_is_unbiased_for_scaled_ratio() {
        let (p, mut o) = gaussian_pair(0.0, 1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let w = poisson_product_w(&p, &mut o, 1.0, &mut rng).unwrap().w;
            assert!((0.0..=1.0).contains(&w));
            s += w;
            s2 += w * w;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
        assert!(within(m, (-1.5f64).exp(), se, 4.0), "{m}");
    }

    #[test]
    fn loose_bound_violation_is_reported() {
        // The interior of the segment exceeds a C that bounds only the endpoints.
        let q = crate::targets::QuarticTarget::perturbed(1.0, 3.0).unwrap();
        let mut o = ScoreOracle::new(std::sync::Arc::new(q));
        let sx = o.score(&[-1.0], 0.0).unwrap();
        let sp = o.score(&[1.0], 0.0).unwrap();
        let p = LangevinProposal::new(vec![-1.0], vec![1.0], 0.5, 0.0, sx, sp).unwrap();
        let c = p.integrand_start().abs().max(p.integrand_end().abs());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hit = (0..1000).any(|_| {
            matches!(
                poisson_product_w(&p, &mut o, c, &mut rng),
                Err(Error::BoundInvalid { .. })
            )
        });
        assert!(hit);
    }

    #[test]
    fn unit_ratio_zero_bound_is_a_fair_coin() {
        // H = 1 needs h = 4 for x = 0, x̃ = 1 under N(0, 1); a symmetric zero-score pair is simpler.
        let o0 = gaussian_oracle(vec![0.0], 1.0).unwrap();
        let mut o = o0.fork();
        let p =
            LangevinProposal::new(vec![0.5], vec![-0.5], 1.0, 0.0, vec![0.0], vec![0.0]).unwrap();
        assert_eq!(log_h(&p), 0.0);
        assert_relative_eq!(immediate_reject_probability(0.0, 0.0), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut acc = 0;
        for _ in 0..n {
            let d = two_coin_decision(&p, &mut o, 0.0, &mut rng, 10).unwrap();
            assert_eq!(d.rounds, 1);
            acc += d.accepted as usize;
        }
        let f = acc as f64 / n as f64;
        assert!(within(f, 0.5, (0.25 / n as f64).sqrt(), 3.0), "{f}");
    }

    #[test]
    fn immediate_reject_vanishes_for_huge_ratio() {
        assert!(immediate_reject_probability(800.0, 5.0) < 1e-300);
        assert_relative_eq!(immediate_reject_probability(-800.0, 0.0), 1.0);
    }

    #[test]
    fn acceptance_matches_barker() {
        let (p, mut o) = gaussian_pair(0.0, 1.0, 0.5);
        let r = (-0.5f64).exp();
        let alpha = barker_probability(log_h(&p) + r.ln());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let acc = (0..n)
            .filter(|_| {
                two_coin_decision(&p, &mut o, 1.5, &mut rng, DEFAULT_MAX_ROUNDS)
                    .unwrap()
                    .accepted
            })
            .count();
        let f = acc as f64 / n as f64;
        let se = (alpha * (1.0 - alpha) / n as f64).sqrt();
        assert!(within(f, alpha, se, 3.0), "{f} vs {alpha}");
    }

    #[test]
    fn rounds_and_queries_follow_cost_formulas() {
        // H = 1 at h = 4 for the x = 0 -> 1 Gaussian move.
        let (p, mut o) = gaussian_pair(0.0, 1.0, 4.0);
        assert!(log_h(&p).abs() < 1e-15);
        let r = (-0.5f64).exp();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 200_000;
        let (mut rounds, mut queries) = (0u64, 0u64);
        for _ in 0..n {
            let d = two_coin_decision(&p, &mut o, 1.0, &mut rng, DEFAULT_MAX_ROUNDS).unwrap();
            rounds += d.rounds;
            queries += d.score_queries;
        }
        assert_eq!(queries, o.queries());
        let mr = rounds as f64 / n as f64;
        let mq = queries as f64 / n as f64;
        assert!(
            (mr / expected_rounds(1.0, 1.0, r) - 1.0).abs() < 0.02,
            "{mr}"
        );
        assert!(
            (mq / expected_queries(1.0, 1.0, r) - 1.0).abs() < 0.02,
            "{mq}"
        );
    }

    #[test]
    fn cost_formula_examples() {
        assert_eq!(expected_queries(0.0, 2.0, 0.5), 0.0);
        let r = (-0.5f64).exp();
        let e = std::f64::consts::E;
        assert_relative_eq!(
            expected_queries(1.0, 1.0, r),
            2.0 * e / (1.0 + r),
            epsilon = 1e-14
        );
        assert_relative_eq!(expected_queries(1.0, 1.0, r), 3.38404, epsilon = 1e-5);
        // H -> infinity: 2 C e^C / r.
        let big = expected_queries(0.7, 1e12, 0.3);
        assert_relative_eq!(big, 2.0 * 0.7 * 0.7f64.exp() / 0.3, max_relative = 1e-10);
        assert_eq!(expected_rounds(0.0, 3.0, 1.0), 1.0);
    }

    #[test]
    fn round_cap_is_an_error() {
        let (p, mut o) = gaussian_pair(0.0, 1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Large C makes acceptance of W astronomically unlikely; one round cannot decide often.
        let mut saw = false;
        for _ in 0..50 {
            match two_coin_decision(&p, &mut o, 40.0, &mut rng, 1) {
                Err(Error::NonTermination { rounds, .. }) => {
                    assert_eq!(rounds, 1);
                    saw = true;
                }
                Ok(d) => assert_eq!(d.rounds, 1),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(saw);
        assert!(two_coin_decision(&p, &mut o, 1.0, &mut rng, 0).is_err());
    }
}
